from django.urls import path
from .views import (
    SweepRunListView,
    SweepRunDetailView,
)

urlpatterns = [
    path('runs/', SweepRunListView.as_view(), name='sweep-run-list'),
    path('runs/<int:id>/', SweepRunDetailView.as_view(), name='sweep-run-detail'),
]
