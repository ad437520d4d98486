"""Benchmark harness: row schema, fits, and small structural sweeps."""
import csv
import io
import json

from hydra_ra import bench
from hydra_ra.crypto import MacAlgorithm

TINY = 1024


class TestRowsAndSerialization:
    def test_csv_schema(self):
        rows = [bench.BenchRow("speck-64-128-cbc", 1024, 0, "mac_ns", 12.0)]
        text = bench.rows_to_csv(rows)
        parsed = list(csv.DictReader(io.StringIO(text)))
        assert list(parsed[0]) == ["algorithm", "size_bytes", "processes",
                                   "metric", "value_ns"]
        assert parsed[0]["algorithm"] == "speck-64-128-cbc"
        assert float(parsed[0]["value_ns"]) == 12.0

    def test_json_alternative(self):
        rows = [bench.BenchRow("blake2s", 0, 4, "fit_r2", 0.999)]
        data = json.loads(bench.rows_to_json(rows))
        assert data == [{"algorithm": "blake2s", "size_bytes": 0,
                         "processes": 4, "metric": "fit_r2",
                         "value_ns": 0.999}]

    def test_write_csv(self, tmp_path):
        rows = [bench.BenchRow("x", 1, 2, "m", 3.0)]
        path = tmp_path / "out.csv"
        with path.open("w", newline="") as stream:
            bench.write_csv(rows, stream)
        assert path.read_bytes().decode() == bench.rows_to_csv(rows)


class TestLinearFit:
    def test_exact_line_recovered(self):
        xs = [1, 2, 3, 4]
        ys = [10 + 5 * x for x in xs]
        fit = bench.fit_linear(xs, ys)
        assert abs(fit.slope - 5) < 1e-9
        assert abs(fit.intercept - 10) < 1e-6
        assert fit.r2 == 1.0 or abs(fit.r2 - 1.0) < 1e-12

    def test_noise_lowers_r2(self):
        xs = list(range(10))
        ys = [x * 100 + (1000 if x == 5 else 0) for x in xs]
        assert bench.fit_linear(xs, ys).r2 < 1.0

    def test_constant_series(self):
        fit = bench.fit_linear([1, 2, 3], [7, 7, 7])
        assert abs(fit.slope) < 1e-9
        assert fit.r2 == 1.0


class TestTiming:
    def test_median_time_positive(self):
        ns = bench.median_time_ns(lambda: sum(range(1000)), repetitions=3)
        assert ns > 0

    def test_interleaved_medians_per_slot(self):
        medians = bench.interleaved_median_ns(
            [lambda: None, lambda: sum(range(20000))], repetitions=5)
        assert len(medians) == 2
        assert medians[1] > medians[0]


class TestMacSweeps:
    def test_algorithm_table_covers_all_five(self):
        rows = bench.bench_mac_algorithms(sizes=(TINY,), repetitions=3)
        assert len(rows) == 5
        assert {r.algorithm for r in rows} == {
            "speck-64-128-cbc", "simon-64-128-cbc", "aes-128-cbc",
            "hmac-sha256", "blake2s"}
        assert all(r.metric == "mac_ns" and r.value_ns > 0 for r in rows)

    def test_zero_size_input_yields_valid_row(self):
        rows = bench.bench_mac_algorithms(sizes=(0,), repetitions=3)
        assert len(rows) == 5
        assert all(r.size_bytes == 0 and r.value_ns > 0 for r in rows)

    def test_memsize_emits_fit_rows(self):
        rows, fits = bench.bench_mac_vs_memsize(
            algorithms=[MacAlgorithm.BLAKE2S_KEYED],
            sizes=(TINY, 2 * TINY, 3 * TINY), repetitions=3)
        metrics = {r.metric for r in rows}
        assert {"mac_ns", "fit_slope_ns_per_byte", "fit_intercept_ns",
                "fit_r2"} <= metrics
        assert MacAlgorithm.BLAKE2S_KEYED in fits


class TestFullPathSweeps:
    def test_process_sweep_row_per_count(self, tmp_path):
        rows, fit = bench.bench_mac_vs_processes(counts=(2, 3),
                                                 target_bytes=8192,
                                                 repetitions=1)
        measured = [r for r in rows if r.metric == "attest_all_ns"]
        assert [r.processes for r in measured] == [2, 3]
        assert measured[1].value_ns > measured[0].value_ns * 0.5
        assert fit.slope > 0

    def test_breakdown_shares_sum_to_one(self):
        rows = bench.bench_breakdown(sizes=(64 * 1024,))
        shares = [r.value_ns for r in rows if r.metric.endswith("_share")]
        assert len(shares) == 3
        assert abs(sum(shares) - 1.0) < 1e-6
        ratio = [r for r in rows if r.metric == "retrieve_to_mac_ratio"]
        assert len(ratio) == 1 and ratio[0].value_ns > 0
