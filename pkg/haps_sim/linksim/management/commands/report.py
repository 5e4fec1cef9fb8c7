from collections import defaultdict

from ...harness import theory_ls_mse, theory_qpsk_ber
from ...noma import NomaConfig, sum_rate, user_sinrs
from ...storage import read_csv, read_csv_header
from ..base import LinkSimCommand


class Command(LinkSimCommand):
    help = 'Print a summary table of a sweep CSV with the analytic references'

    def add_arguments(self, parser):
        parser.add_argument('csv', help='CSV written by the sweep command')

    def run(self, **options):
        records = read_csv(options['csv'])
        echo = read_csv_header(options['csv']) or {}

        self.stdout.write(
            f"{'snr_db':>7} {'estimator':>10} {'user':>4} {'mse_cfo':>11} {'mse_channel':>11} "
            f"{'ber':>10} {'loss':>7} {'theory_mse':>11} {'theory_ber':>11}"
        )
        for r in records:
            self.stdout.write(
                f"{r.snr_db:7g} {r.estimator:>10} {r.user:4d} {r.mse_cfo:11.4e} {r.mse_channel:11.4e} "
                f"{r.ber:10.3e} {r.packet_loss:7.4f} {theory_ls_mse(r.snr_db):11.4e} "
                f"{theory_qpsk_ber(r.snr_db):11.4e}"
            )

        if any(r.user > 0 for r in records):
            noma = NomaConfig(**{k: v for k, v in echo.get('noma', {}).items() if k != 'num_users'})
            points = defaultdict(list)
            for r in records:
                points[r.snr_db].append(r)
            self.stdout.write('')
            self.stdout.write(f"{'snr_db':>7} {'sum_rate':>10}  (perfect SIC, bit/s/Hz)")
            for snr_db in sorted(points):
                rate = sum_rate(user_sinrs(noma, 10.0 ** (snr_db / 10.0)))
                self.stdout.write(f"{snr_db:7g} {rate:10.4f}")
        self.stdout.write(self.style.SUCCESS(f"{len(records)} records"))
