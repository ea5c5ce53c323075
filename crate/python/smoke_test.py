"""Smoke test for the pygbart extension.

Build and install first, e.g.
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/pygbart-*.whl
then run `python python/smoke_test.py`.
"""

import math

import pygbart


def close(a, b, tol):
    assert abs(a - b) < tol, (a, b)


def main():
    close(pygbart.friedman([0.5] * 5), 10 * math.sin(math.pi / 4) + 7.5, 1e-12)
    close(pygbart.trigamma(1.0), math.pi ** 2 / 6, 1e-10)
    close(pygbart.digamma(1.0), -0.5772156649015329, 1e-10)
    close(pygbart.log_gamma(5.0), math.log(24.0), 1e-10)
    close(pygbart.gamma_q(1.0, 2.0), math.exp(-2.0), 1e-12)

    total, log_cpo = pygbart.lpml([[-1.0], [-3.0]])
    close(log_cpo[0], -2.4338, 1e-4)
    close(total, log_cpo[0], 1e-15)

    train = pygbart.simulate("friedman_gaussian", n=200, p=6, seed=1)
    test = pygbart.simulate("friedman_gaussian", n=50, p=6, seed=2)
    assert train["delta"] is None and len(train["x"]) == 200
    fit = pygbart.fit(train["x"], train["y"], model="gaussian", num_trees=20,
                      iterations=400, burn_in=200, seed=3)
    assert fit.num_draws == 200 and fit.model == "gaussian"
    pred = fit.predict(test["x"])
    assert all(lo <= hi for lo, hi in zip(pred["lambda_lower"], pred["lambda_upper"]))
    mse = sum((p - t) ** 2 for p, t in zip(pred["lambda_mean"], test["truth_lambda"])) / 50
    assert mse < 10.0, mse
    trace = fit.trace()
    assert len(trace["iteration"]) == 400 and "sigma" in trace
    lp, cpo = fit.lpml()
    assert math.isfinite(lp) and len(cpo) == 200
    assert abs(sum(fit.split_probs()) - 1.0) < 1e-9

    again = pygbart.fit(train["x"], train["y"], model="gaussian", num_trees=20,
                        iterations=400, burn_in=200, seed=3)
    assert again.predict(test["x"]) == pred, "same seed must replay"

    surv = pygbart.simulate("friedman_aft_loglogistic", n=150, seed=4)
    sfit = pygbart.fit(surv["x"], surv["y"], model="aft_loglogistic", delta=surv["delta"],
                       num_trees=10, iterations=200, burn_in=100, seed=5)
    curve = sfit.survival(surv["x"][0], [0.0, 1.0, 2.0, 5.0])
    assert curve["mean"][0] == 1.0
    assert all(a >= b for a, b in zip(curve["mean"], curve["mean"][1:]))

    for bad in (
        lambda: fit.survival(test["x"][0], [1.0]),
        lambda: pygbart.fit(surv["x"], surv["y"], model="weibull"),
        lambda: pygbart.simulate("nope"),
        lambda: fit.predict([[0.1, 0.2]]),
    ):
        try:
            bad()
        except (ValueError, NotImplementedError):
            pass
        else:
            raise AssertionError("expected an error")

    print("pygbart smoke test passed")


if __name__ == "__main__":
    main()
