"""Pure-Python twin of the compiled decoder kernel.

Selected at import when the compiled extension is unavailable.  Keeps the
exact candidate order and floating-point accumulation order of the Cython
version so results are bit-identical (Python floats are C doubles; no FMA
on either side).
"""

import numpy as np

KERNEL_KIND = "python"


def decode_unit(
    metrics,
    states,
    y_arr,
    h_arr,
    pos_by_label_arr,
    feas_label,
    next_by_b,
    slice_user,
    slice_shift,
    q,
    n_users,
    gate2,
    bits_per_tone,
    state_bits,
):
    """See _speedups.decode_unit."""
    n_surv = len(metrics)
    K = states.shape[1]
    qmask = (1 << q) - 1
    d_f = slice_user.shape[1]

    # Candidate stage, vectorized per (survivor, tone).
    cand = []  # [k][i] -> (words list, d2 list, next list)
    n_gated = 0
    for k in range(K):
        labs = feas_label[states[:, k]]
        pos = pos_by_label_arr[k][labs]
        # explicit real arithmetic, one ufunc per rounding step, to match
        # the compiled kernel exactly (no complex-multiply FMA surprises)
        pr = np.ascontiguousarray(pos.real)
        pi = np.ascontiguousarray(pos.imag)
        hr = float(h_arr[k].real)
        hi = float(h_arr[k].imag)
        hyr = hr * pr - hi * pi
        hyi = hr * pi + hi * pr
        dre = float(y_arr[k].real) - hyr
        dim = float(y_arr[k].imag) - hyi
        d2 = dre * dre + dim * dim
        per_tone = []
        for i in range(n_surv):
            row = d2[i]
            if gate2 < 0.0:
                sel = np.arange(row.shape[0])
            else:
                sel = np.flatnonzero(row <= gate2)
            if sel.size == 0:
                sel = np.array([int(np.argmin(row))])
                n_gated += 1
            per_tone.append(
                (
                    sel,
                    row[sel],
                    next_by_b[states[i, k]][sel],
                )
            )
        cand.append(per_tone)

    ext_metric = []
    ext_bits = []
    ext_next = []
    ext_prev = []
    shifts_b = [(K - 1 - k) * bits_per_tone for k in range(K)]
    shifts_s = [(K - 1 - k) * state_bits for k in range(K)]
    su = slice_user.tolist()
    ss = slice_shift.tolist()

    for i in range(n_surv):
        user_bits = [-1] * n_users
        tone = [cand[k][i] for k in range(K)]
        choice = [0] * K
        acc_metric = [0.0] * (K + 1)
        acc_bits = [0] * (K + 1)
        acc_next = [0] * (K + 1)
        touched: list[list[int]] = [[] for _ in range(K)]
        acc_metric[0] = float(metrics[i])
        depth = 0
        choice[0] = 0
        while True:
            words, d2s, nexts = tone[depth]
            if choice[depth] >= len(words):
                if depth == 0:
                    break
                depth -= 1
                for uid in touched[depth]:
                    user_bits[uid] = -1
                touched[depth] = []
                choice[depth] += 1
                continue
            ci = choice[depth]
            word = int(words[ci])
            ok = True
            mine: list[int] = []
            for uid, sh in zip(su[depth], ss[depth]):
                u = (word >> sh) & qmask
                if user_bits[uid] < 0:
                    user_bits[uid] = u
                    mine.append(uid)
                elif user_bits[uid] != u:
                    ok = False
                    break
            if not ok:
                for uid in mine:
                    user_bits[uid] = -1
                choice[depth] += 1
                continue
            touched[depth] = mine
            acc_metric[depth + 1] = acc_metric[depth] + float(d2s[ci])
            acc_bits[depth + 1] = acc_bits[depth] | (word << shifts_b[depth])
            acc_next[depth + 1] = acc_next[depth] | (int(nexts[ci]) << shifts_s[depth])
            if depth == K - 1:
                ext_metric.append(acc_metric[depth + 1])
                ext_bits.append(acc_bits[depth + 1])
                ext_next.append(acc_next[depth + 1])
                ext_prev.append(i)
                for uid in touched[depth]:
                    user_bits[uid] = -1
                touched[depth] = []
                choice[depth] += 1
            else:
                depth += 1
                choice[depth] = 0

    return (
        np.asarray(ext_metric, dtype=np.float64),
        np.asarray(ext_bits, dtype=np.int64),
        np.asarray(ext_next, dtype=np.int64),
        np.asarray(ext_prev, dtype=np.int64),
        n_gated,
    )
