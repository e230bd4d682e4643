"""
Run every verification preset and summarise the certificate outcomes.

Each preset pairs a method, a problem and a convergence guarantee; the
harness checks the guarantee at every iterate.  Presets that fail report the
first violated certificate.  See README.md for why some of them fail.

Usage: python3 demos/certificate_report.py [iterations]
"""

import sys

from inclsolve.harness import list_presets, verify_preset

iters = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
for name, desc in list_presets():
    ok, lines, _ = verify_preset(name, iterations=iters)
    print(f"{'PASS' if ok else 'FAIL'}  {name:14s} {desc}")
    for line in lines:
        if not line.startswith("PASS"):
            print(f"      {line}")
