"""Independent scalar reference implementations used only by tests.

Everything here is deliberately unvectorized: plain Python loops over
lists, math.exp/math.log on scalars. These are the ground truth the
production implementations are checked against.
"""

import math


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def neighborhood_raw(indices, beta):
    k = len(indices)
    raw = [[0.0] * k for _ in range(k)]
    for l in range(k):
        for m in range(k):
            same_stay = indices[l].stay_index == indices[m].stay_index
            adjacent = abs(indices[l].note_index - indices[m].note_index) <= 1
            if same_stay and adjacent:
                gap = abs(indices[m].target_time - indices[l].target_time)
                raw[l][m] = beta / (beta + gap)
    return raw


def neighborhood_weights(raw):
    k = len(raw)
    weights = [[0.0] * k for _ in range(k)]
    for l in range(k):
        row_sum = sum(raw[l])
        for m in range(k):
            weights[l][m] = raw[l][m] / row_sum
    return weights


def aware_loss(h_s, h_t, weights, temperature, denominator="exclude_l"):
    k = len(h_s)
    total = 0.0
    for l in range(k):
        for m in range(k):
            if weights[l][m] == 0.0:
                continue
            num_st = math.exp(dot(h_s[l], h_t[m]) / temperature)
            num_ts = math.exp(dot(h_t[l], h_s[m]) / temperature)
            if denominator == "exclude_l":
                den_st = sum(
                    math.exp(dot(h_s[l], h_t[n]) / temperature) for n in range(k) if n != l
                )
                den_ts = sum(
                    math.exp(dot(h_t[l], h_s[n]) / temperature) for n in range(k) if n != l
                )
            else:
                den_st = sum(
                    math.exp(dot(h_s[l], h_t[n]) / temperature) for n in range(k) if n != m
                )
                den_ts = sum(
                    math.exp(dot(h_t[l], h_s[n]) / temperature) for n in range(k) if n != m
                )
            total += (
                -weights[l][m]
                / (2 * k)
                * (math.log(num_st / den_st) + math.log(num_ts / den_ts))
            )
    return total


def discriminative_loss(h_s, h_t, indicator, temperature):
    k = len(h_s)
    total = 0.0
    for l in range(k):
        num = math.exp(dot(h_s[l], h_t[l]) / temperature)
        den_st = sum(
            math.exp(dot(h_s[l], h_t[m]) / temperature) for m in range(k) if indicator[l][m]
        )
        den_ts = sum(
            math.exp(dot(h_t[l], h_s[m]) / temperature) for m in range(k) if indicator[l][m]
        )
        total += -(math.log(num / den_st) + math.log(num / den_ts)) / (2 * k)
    return total


def infonce_loss(h_s, h_t, temperature):
    k = len(h_s)
    total = 0.0
    for l in range(k):
        num = math.exp(dot(h_s[l], h_t[l]) / temperature)
        den_row = sum(math.exp(dot(h_s[l], h_t[m]) / temperature) for m in range(k))
        den_col = sum(math.exp(dot(h_s[m], h_t[l]) / temperature) for m in range(k))
        total += -(math.log(num / den_row) + math.log(num / den_col)) / (2 * k)
    return total


def pairwise_auroc(scores, labels):
    positives = [s for s, y in zip(scores, labels) if y == 1]
    negatives = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in positives:
        for n in negatives:
            if p > n:
                total += 1.0
            elif p == n:
                total += 0.5
    return total / (len(positives) * len(negatives))


def step_curve_auprc(scores, labels):
    thresholds = sorted(set(scores), reverse=True)
    n_pos = sum(labels)
    area = 0.0
    previous_recall = 0.0
    for threshold in thresholds:
        tp = sum(1 for s, y in zip(scores, labels) if s >= threshold and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= threshold and y == 0)
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += (recall - previous_recall) * precision
        previous_recall = recall
    return area
