from django.db.models import Count
from rest_framework import generics
from drf_spectacular.utils import extend_schema, OpenApiResponse

from .models import SweepRun
from .serializers import SweepRunListSerializer, SweepRunDetailSerializer


@extend_schema(
    tags=['Sweeps'],
    description='List archived sweeps, newest first',
    responses={200: SweepRunListSerializer(many=True)},
)
class SweepRunListView(generics.ListAPIView):
    """
    GET /api/runs: List archived sweeps with their record counts.
    """
    serializer_class = SweepRunListSerializer

    def get_queryset(self):
        return SweepRun.objects.annotate(num_records=Count('records')).order_by('-created_at', '-id')


@extend_schema(
    tags=['Sweeps'],
    description='Retrieve one archived sweep with its scenario echo and all metric records',
    responses={
        200: SweepRunDetailSerializer,
        404: OpenApiResponse(description='Sweep not found'),
    },
)
class SweepRunDetailView(generics.RetrieveAPIView):
    """
    GET /api/runs/{id}: Retrieve a sweep with every (SNR, estimator, user) record.
    """
    lookup_field = 'id'
    serializer_class = SweepRunDetailSerializer

    def get_queryset(self):
        return SweepRun.objects.annotate(num_records=Count('records')).prefetch_related('records')
