"""Regenerates the bundled fixtures. Run from this directory."""
import json

import numpy as np
from scipy.linalg import sqrtm


def dump(path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2)
        f.write("\n")


def mat(a):
    return [[float(v) for v in row] for row in np.atleast_2d(a)]


def vec(a):
    return [float(v) for v in np.ravel(a)]


rng = np.random.default_rng(20240611)

# 1-16-1 tanh network; hidden weight variances decay geometrically.
w1 = rng.normal(size=(16, 1))
b1 = rng.normal(scale=0.5, size=16)
w2 = rng.normal(scale=0.25, size=(1, 16))
b2 = rng.normal(scale=0.1, size=1)
dump("mlp_1_16_1_tanh.json", {
    "input_dim": 1,
    "layers": [
        {"type": "stochastic_linear", "weight_mean": mat(w1),
         "weight_var": mat(0.05 ** np.arange(16).reshape(16, 1)),
         "bias_mean": vec(b1), "bias_var": vec(np.zeros(16)), "ntk": False},
        {"type": "activation", "kind": "tanh"},
        {"type": "stochastic_linear", "weight_mean": mat(w2),
         "weight_var": mat(np.full((1, 16), 0.01)),
         "bias_mean": vec(b2), "bias_var": [0.01], "ntk": False},
    ],
})

dump("deterministic_relu.json", {
    "input_dim": 2,
    "layers": [
        {"type": "linear", "weight": mat(rng.normal(size=(4, 2))), "bias": vec(rng.normal(size=4))},
        {"type": "activation", "kind": "relu"},
        {"type": "linear", "weight": mat(rng.normal(size=(1, 4))), "bias": vec(rng.normal(size=1))},
    ],
})


def zero_layer(n_out, n_in):
    return {"type": "stochastic_linear", "weight_mean": mat(np.zeros((n_out, n_in))),
            "weight_var": mat(np.ones((n_out, n_in))), "bias_mean": vec(np.zeros(n_out)),
            "bias_var": vec(np.ones(n_out)), "ntk": False}


dump("prior_2x32_tanh.json", {"input_dim": 1, "layers": [
    zero_layer(32, 1), {"type": "activation", "kind": "tanh"},
    zero_layer(32, 32), {"type": "activation", "kind": "tanh"},
    zero_layer(1, 32)]})
dump("prior_tiny.json", {"input_dim": 1, "layers": [
    zero_layer(4, 1), {"type": "activation", "kind": "tanh"}, zero_layer(1, 4)]})

with open("points_1d.csv", "w") as f:
    f.write("0.5\n")
with open("points_3.csv", "w") as f:
    f.write("-1.0\n0.25\n1.5\n")
with open("points_dup.csv", "w") as f:
    f.write("0.7\n0.7\n")
with open("points_2d.csv", "w") as f:
    f.write("0.3,-1.2\n1.0,0.4\n")
with open("grid20.csv", "w") as f:
    for x in np.linspace(-2.0, 2.0, 20):
        f.write(f"{float(x)!r}\n")


def spd(d):
    a = rng.normal(size=(d, d))
    return a @ a.T / d + 0.1 * np.eye(d)


def gw2sq(m1, c1, m2, c2):
    r = sqrtm(c2)
    cross = np.real(sqrtm(r @ c1 @ r))
    return float(np.sum((m1 - m2) ** 2) + np.trace(c1 + c2 - 2 * cross))


pa = [(rng.normal(size=2), spd(2)) for _ in range(2)]
pb = [(rng.normal(size=2) + 1.0, spd(2)) for _ in range(2)]
wa = np.array([0.3, 0.7])
wb = np.array([0.55, 0.45])
for path, comps, w in (("gmm_pair_a.json", pa, wa), ("gmm_pair_b.json", pb, wb)):
    dump(path, {"weights": vec(w),
                "components": [{"mean": vec(m), "cov": {"full": mat(c)}} for m, c in comps]})

# Vertex enumeration of the 2x2 transportation polytope: the plan is fixed by its
# (0,0) entry t, feasible on [max(0, a0 - b1), min(a0, b0)]; the LP optimum is at an end.
cost = np.array([[gw2sq(*pa[i], *pb[j]) for j in range(2)] for i in range(2)])
lo, hi = max(0.0, wa[0] - wb[1]), min(wa[0], wb[0])
best = np.inf
for t in (lo, hi):
    plan = np.array([[t, wa[0] - t], [wb[0] - t, wa[1] - wb[0] + t]])
    best = min(best, float(np.sum(plan * cost)))
dump("gmm_pair_expected.json", {"mw2": float(np.sqrt(best)), "cost_matrix": mat(cost)})
