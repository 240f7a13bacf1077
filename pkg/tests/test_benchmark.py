import runpy
from pathlib import Path

BENCH = Path(__file__).resolve().parents[1] / "benchmarks" / "bench_kernel.py"


def test_benchmark_runs(capsys):
    mod = runpy.run_path(str(BENCH))
    mod["main"](["--steps", "2000", "--repeat", "1"])
    out = capsys.readouterr().out
    assert "python:" in out
    if "speedup" in out:
        assert "final states identical: True" in out
