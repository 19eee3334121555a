"""Straightforward pure-Python fusion, used only as a test oracle.

Nothing here imports fusekit's fusion or uncertainty code.
"""
import math


def argmax(v):
    best = 0
    for i in range(1, len(v)):
        if v[i] > v[best]:
            best = i
    return best


def norm_entropy(row):
    h = 0.0
    for p in row:
        if p > 0:
            h -= p * math.log(p)
    return min(max(h / math.log(len(row)), 0.0), 1.0)


def uncertainties(probs, eps=1e-6):
    """probs: nested lists M x S x K -> M x S clamped uncertainties."""
    return [[max(norm_entropy(row), eps) for row in model] for model in probs]


def mean_label(probs, s):
    m_count, k = len(probs), len(probs[0][s])
    q = [0.0] * k
    for m in range(m_count):
        for c in range(k):
            q[c] += probs[m][s][c]
    return argmax([x / m_count for x in q])


def ul(probs, u):
    out = []
    for s in range(len(probs[0])):
        best = 0
        for m in range(1, len(probs)):
            if u[m][s] < u[best][s]:
                best = m
        out.append(argmax(probs[best][s]))
    return out


def ut(probs, u, t):
    base = ul(probs, u)
    out = []
    for s in range(len(probs[0])):
        lowest = min(u[m][s] for m in range(len(probs)))
        out.append(base[s] if lowest < t else mean_label(probs, s))
    return out


def _weighted(probs, w):
    out = []
    for s in range(len(probs[0])):
        k = len(probs[0][s])
        q = [0.0] * k
        for m in range(len(probs)):
            for c in range(k):
                q[c] += w[m][s] * probs[m][s][c]
        out.append(argmax(q))
    return out


def _norm_per_sample(x):
    m_count, s_count = len(x), len(x[0])
    w = [[0.0] * s_count for _ in range(m_count)]
    for s in range(s_count):
        total = 0.0
        for m in range(m_count):
            total += x[m][s]
        for m in range(m_count):
            w[m][s] = x[m][s] / total if total > 0 else 1.0 / m_count
    return w


def _norm_per_model(x):
    w = []
    for row in x:
        total = math.fsum(row)
        w.append([v / total if total > 0 else 1.0 / len(row) for v in row])
    return w


def uw(probs, u, per_sample=True):
    inv = [[1.0 / v for v in row] for row in u]
    return _weighted(probs, _norm_per_sample(inv) if per_sample else _norm_per_model(inv))


def cw(probs, u, per_model=True):
    conf = [[1.0 - v for v in row] for row in u]
    return _weighted(probs, _norm_per_model(conf) if per_model else _norm_per_sample(conf))


def mean(probs):
    return [mean_label(probs, s) for s in range(len(probs[0]))]


def maxf(probs):
    out = []
    for s in range(len(probs[0])):
        k = len(probs[0][s])
        out.append(argmax([max(probs[m][s][c] for m in range(len(probs))) for c in range(k)]))
    return out


def balanced_accuracy(pred, truth):
    classes = sorted(set(truth))
    recalls = []
    for c in classes:
        idx = [i for i, t in enumerate(truth) if t == c]
        recalls.append(sum(pred[i] == c for i in idx) / len(idx))
    return sum(recalls) / len(recalls)
