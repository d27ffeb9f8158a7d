"""
The whole pipeline from the command line
========================================

Generates a synthetic survey bundle, runs the full summary, and reads
back the report. Everything here also works from a shell:

    surveysense simulate --out demo-bundle
    surveysense summary --config demo-bundle/config.json --out demo-run
"""

import contextlib
import io
import json
import tempfile
from pathlib import Path

from surveysense import cli


def quiet(argv):
    # each subcommand prints its JSON result; keep the demo output short
    with contextlib.redirect_stdout(io.StringIO()):
        return cli.main(argv)


workdir = Path(tempfile.mkdtemp(prefix="surveysense-demo-"))
bundle = workdir / "bundle"
run = workdir / "run"

rc = quiet(["simulate", "--out", str(bundle)])
assert rc == 0
print("bundle files:", sorted(p.name for p in bundle.iterdir()))

truth = json.loads((bundle / "truth.json").read_text())
print(f"simulated population mean: {truth['mu_true']:.4f} "
      f"({truth['n_sample']} of {truth['n_population']} sampled)")

rc = quiet(["summary", "--config", str(bundle / "config.json"), "--out", str(run)])
assert rc == 0
print("\nrun artifacts:", sorted(p.name for p in run.iterdir()))

report = json.loads((run / "report.json").read_text())
est = report["estimates"]
print(f"\nunweighted {est['unweighted']['value']:.4f}  "
      f"weighted {est['weighted']['value']:.4f}  "
      f"truth {truth['mu_true']:.4f}")
print(f"robustness value: {report['robustness']['rv']:.4f}")
print(f"killer region area: {report['contour']['killer_area']:.4f}")
print("benchmarks:")
for row in report["benchmarks"]:
    print(f"  {row['label']:>4}: rho {row['rho']:+.3f}  R2 {row['r2']:.4f}  "
          f"MRCS {row['mrcs']:.2f}")
print(f"detection: {report['detection']['recommendation']}")

# rerunning with the same config and seed writes byte-identical output
again = workdir / "run2"
rc = quiet(["summary", "--config", str(bundle / "config.json"), "--out", str(again)])
assert rc == 0
same = (run / "report.json").read_bytes() == (again / "report.json").read_bytes()
print("\nbyte-identical rerun:", same)
