"""Smoke test for the Python extension.

Build it first:

    cargo build -p acyclic-mpc-py --features extension-module

The script imports an installed `acyclic_mpc_py` if there is one, otherwise
it loads the shared library from target/.
"""

import importlib
import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
RUNNING = ["ABC", "BD", "BO", "BCE", "CEJ", "CEF", "EFG", "EHJ", "HI", "KL", "LM", "HK", "HN"]


def load():
    try:
        return importlib.import_module("acyclic_mpc_py")
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libacyclic_mpc_py.so"
        if lib.exists():
            tmp = Path(tempfile.mkdtemp())
            shutil.copy(lib, tmp / "acyclic_mpc_py.so")
            sys.path.insert(0, str(tmp))
            return importlib.import_module("acyclic_mpc_py")
    sys.exit("acyclic_mpc_py is not built; see the module docstring")


def main():
    m = load()

    assert m.is_acyclic(["AB", "BC", "CD"])
    assert not m.is_acyclic(["AB", "BC", "CA"])

    assert sorted(m.canonical_edge_cover(["AB", "BC", "CD"])) == ["AB", "CD"]
    assert len(m.canonical_edge_cover(RUNNING)) == 9
    assert len(m.signature_path_clusters(RUNNING)) == 9

    # Two relations of 100 tuples on 4 machines: max(200/4, sqrt(100*100/4)) = 50.
    assert abs(m.induced_load(["AB", "BC"], [100, 100], 4) - 50.0) < 1e-9

    spec = m.generated_query(["AB", "BC", "CD"], seed=3, size=200, skew="zipf:1.2", domain=50, planted=2)
    report = json.loads(m.run_query(spec, 8, verify=True))
    assert report["verify"] is True
    assert report["run"]["violations"] == []
    assert report["run"]["load"]["rounds"] <= report["run"]["round_cap"]
    assert m.run_query(spec, 8) == m.run_query(spec, 8)

    try:
        m.run_query(m.generated_query(["AB", "BC", "CA"]), 4)
    except ValueError as e:
        assert "not acyclic" in str(e)
    else:
        raise AssertionError("cyclic query accepted")

    stats = report["run"]["load"]
    print(f"ok: output {report['run']['output_size']} tuples, max load {stats['max_load']}, L {stats['L']:.1f}")


if __name__ == "__main__":
    main()
