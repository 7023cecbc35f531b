#!/usr/bin/env python3
"""Smoke test for the hrc_py extension module.

Builds the cdylib with cargo, stages it under an importable name, and
exercises the main entry points end to end.
"""

import shutil
import subprocess
import sys
import sysconfig
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_and_stage() -> Path:
    subprocess.run(["cargo", "build", "-p", "hrc-py"], cwd=REPO, check=True)
    built = REPO / "target" / "debug" / "libhrc_py.so"
    if not built.exists():  # e.g. macOS
        built = REPO / "target" / "debug" / "libhrc_py.dylib"
    stage = Path(tempfile.mkdtemp(prefix="hrc_py_"))
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy2(built, stage / f"hrc_py{suffix}")
    return stage


def main() -> None:
    sys.path.insert(0, str(build_and_stage()))
    import hrc_py

    # Graph construction, text round-trip, structure queries.
    g = hrc_py.Graph([[], [], [0, 1]], ["OR", "OR", "AND"], 2)
    assert g.n == 3 and g.final_goal == 2
    assert g.parents(2) == [0, 1] and g.kind(2) == "AND"
    assert hrc_py.Graph.from_text(g.to_text()).to_text() == g.to_text()
    assert g.roots() == [0, 1] and g.has_path(0, 2)

    tree = hrc_py.Graph.tree(40, b=3, kinds="all-or", seed=0)
    assert tree.n == 40 and len(tree.edges()) == 39

    er = hrc_py.Graph.semi_er(12, c=0.6, kinds="random", seed=1)
    assert er.n == 12 and set(er.ancestors(er.final_goal)) <= set(range(11))

    # Discoverability: the undiscoverable-parent example.
    chain_and = hrc_py.Graph([[], [0], [0, 1]], ["OR", "OR", "AND"], 2)
    assert chain_and.discoverable_parents()[2] == [1]

    # SHD between an estimate and the truth.
    empty = hrc_py.Graph([[], [], []], ["OR", "OR", "OR"], 2)
    assert hrc_py.graph_shd(empty, g) == (2, 0, 2)

    # Search, exact cost, Monte Carlo agreement.
    res = hrc_py.search(tree, strategy="shortest-path", seed=0)
    assert res["reached"] and res["expansion_order"][-1] == 39
    chain = hrc_py.Graph([[], [0]], ["OR", "OR"], 1)
    assert abs(hrc_py.exact_cost(chain, "random") - 7.0) < 1e-9
    mean, stderr = hrc_py.mc_cost(chain, "random", runs=32, seed=3)
    assert abs(mean - 7.0) < 1e-9 and stderr == 0.0

    # Full simulated loop recovers the craft structure.
    out = hrc_py.run_hrc(g, strategy="causal-effect", discovery="ssd-oracle", seed=5)
    assert out["reached"] and out["shd"] == 0
    assert out["expansion_order"] == [0, 1, 2]
    assert out["total_probes"] > 0

    # Gridworld run on the small map.
    gw = hrc_py.run_gridworld(map="mini", strategy="causal-effect", seed=1, train_episodes=250)
    assert gw["reached"] and gw["success_rate"] >= 0.9
    assert gw["primitive_steps"] <= 200_000

    # Errors surface as ValueError.
    try:
        hrc_py.Graph([[1], [0]], ["OR", "OR"], 1)
    except ValueError:
        pass
    else:
        raise AssertionError("cyclic graph must be rejected")

    print("hrc_py smoke test: all checks passed")


if __name__ == "__main__":
    main()
