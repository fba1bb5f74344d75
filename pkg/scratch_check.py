"""Scratch validation of the sampler against exact enumeration (dev only)."""
import numpy as np
import graphcp as g
from graphcp.likelihood import log_lik_full


def exact_marginals_two_series(panel, model, p_bar, lam):
    """Exact P(S_{i,t}=1) by enumeration over all binary matrices (as mask pairs)."""
    T = panel.T
    n = T - 1
    cache = model.build_cache(panel)
    n_masks = 1 << n
    ll = np.zeros((2, n_masks))
    kk = np.zeros(n_masks)
    for mask in range(n_masks):
        taus = tuple(t + 2 for t in range(n) if mask >> t & 1)
        kk[mask] = len(taus)
        for i in range(2):
            bounds = (1,) + taus + (T + 1,)
            ll[i, mask] = sum(model.segment_loglik(cache, i, a, b) for a, b in zip(bounds, bounds[1:]))
    a = np.arange(n_masks)
    common = np.bitwise_count(a[:, None] & a[None, :]).astype(np.float64)
    W = (ll[0] + p_bar * kk)[:, None] + (ll[1] + p_bar * kk)[None, :] + lam * common
    W -= W.max()
    P = np.exp(W)
    Z = P.sum()
    bits = ((a[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)  # (masks, n)
    m1 = (P.sum(axis=1) @ bits) / Z
    m2 = (P.sum(axis=0) @ bits) / Z
    return np.vstack([m1, m2])


rng = np.random.default_rng(12345)
T = 12
x1 = np.concatenate([rng.poisson(3.0, 6), rng.poisson(11.0, 6)])
x2 = np.concatenate([rng.poisson(4.0, 7), rng.poisson(12.0, 5)])
panel = g.SeriesPanel(np.vstack([x1, x2]), kind="count")
model = g.PoissonGamma(2.0, 0.4)

for lam in (0.0, 2.0, 5.0):
    for p in (0.01, 0.1):
        p_bar = float(np.log(p / (1 - p)))
        exact = exact_marginals_two_series(panel, model, p_bar, lam)
        graph = g.DependencyGraph(np.array([[0.0, lam], [lam, 0.0]]))
        hyper = g.Hyperparameters(p_bar=p_bar)
        cfg = g.SamplerConfig(iterations=200_000, burn_in=20_000, seed=7)
        import time
        t0 = time.time()
        sample = g.run_chain(panel, model, graph, hyper, cfg)
        dt = time.time() - t0
        est = np.vstack([sample.position_marginals(0), sample.position_marginals(1)])
        err = np.abs(est - exact).max()
        print(f"lam={lam} p={p}: max marginal error {err:.4f}  ({dt:.1f}s, "
              f"{220000/dt/1000:.0f}k it/s) accept_bd="
              f"{sample.acceptance['birth_death']['accepted']/max(1,sample.acceptance['birth_death']['proposed']):.2f}")
        assert err < 0.02, (lam, p, err)
print("exact-target scratch check OK")
