import numpy as np
import pytest

from fdsic.nn import loss_and_gradients


def numerical_gradient(net, x, y, eps=1e-5):
    """Central finite differences of the MSE loss over every flat parameter."""
    from fdsic.nn import mse_loss

    theta = net.get_flat()
    grad = np.empty_like(theta)
    for i in range(theta.size):
        saved = theta[i]
        theta[i] = saved + eps
        net.set_flat(theta)
        up = mse_loss(net.forward(x), y)
        theta[i] = saved - eps
        net.set_flat(theta)
        down = mse_loss(net.forward(x), y)
        theta[i] = saved
        grad[i] = (up - down) / (2 * eps)
    net.set_flat(theta)
    return grad


def analytic_gradient(net, x, y):
    loss_and_gradients(net, x, y)
    return np.concatenate([g.ravel() for g in net.grads])


def gradient_mismatch(net, x, y, rtol=1e-5, atol=1e-7):
    """Indices where analytic and numerical gradients disagree."""
    num = numerical_gradient(net, x, y)
    ana = analytic_gradient(net, x, y)
    bad = np.abs(ana - num) > np.maximum(rtol * np.abs(num), atol)
    return np.flatnonzero(bad), ana, num


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance summary ---------------------------------------------------------

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number")


def pytest_runtest_logreport(report):
    crit = getattr(report, "_criterion", None)
    if crit is None:
        return
    n, title = crit
    entry = _criteria.setdefault(n, {"title": title, "outcomes": []})
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry["outcomes"].append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        outs = e["outcomes"]
        if not outs:
            continue
        if all(o == "skipped" for o in outs):
            status = "SKIP"
        elif any(o == "failed" for o in outs):
            status = "FAIL"
        else:
            status = "PASS"
        failed = sum(o == "failed" for o in outs)
        detail = f" ({failed}/{len(outs)} checks failed)" if failed else f" ({len(outs)} check{'s' * (len(outs) != 1)})"
        tr.write_line(f"{status}  criterion {n:>2}: {e['title']}{detail}")
