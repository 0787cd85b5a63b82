# cython: language_level=3
"""Compiled branch-enumeration kernel for the two-layer decoder.

Mirrors _kernel_py.decode_unit exactly: same candidate gating, same DFS
order, same floating-point accumulation order, so both kernels produce
bit-identical extensions.
"""

import numpy as np

cimport numpy as cnp

KERNEL_KIND = "compiled"


def decode_unit(
    double[::1] metrics,
    cnp.int16_t[:, ::1] states,
    y_arr,
    h_arr,
    pos_by_label_arr,
    cnp.int16_t[:, ::1] feas_label,
    cnp.int16_t[:, ::1] next_by_b,
    cnp.int64_t[:, ::1] slice_user,
    cnp.int64_t[:, ::1] slice_shift,
    int q,
    int n_users,
    double gate2,
    int bits_per_tone,
    int state_bits,
):
    """Enumerate qualified branch extensions for one time unit.

    Returns (ext_metric, ext_bits, ext_next, ext_prev, n_gated) where rows
    are emitted survivor-major in depth-first candidate order and n_gated
    counts (survivor, tone) pairs whose radius gate came up empty.
    """
    cdef int n_surv = metrics.shape[0]
    cdef int K = states.shape[1]
    cdef int n_b = feas_label.shape[1]
    cdef int d_f = slice_user.shape[1]
    cdef int qmask = (1 << q) - 1

    cdef double[::1] y_re = np.ascontiguousarray(np.real(y_arr))
    cdef double[::1] y_im = np.ascontiguousarray(np.imag(y_arr))
    cdef double[::1] h_re = np.ascontiguousarray(np.real(h_arr))
    cdef double[::1] h_im = np.ascontiguousarray(np.imag(h_arr))
    cdef double[:, ::1] p_re = np.ascontiguousarray(np.real(pos_by_label_arr))
    cdef double[:, ::1] p_im = np.ascontiguousarray(np.imag(pos_by_label_arr))

    # Candidate scratch: compacted per (survivor, tone).
    cand_word_np = np.empty((n_surv, K, n_b), dtype=np.int16)
    cand_d2_np = np.empty((n_surv, K, n_b), dtype=np.float64)
    cand_next_np = np.empty((n_surv, K, n_b), dtype=np.int16)
    cand_cnt_np = np.zeros((n_surv, K), dtype=np.int64)
    cdef cnp.int16_t[:, :, ::1] cand_word = cand_word_np
    cdef double[:, :, ::1] cand_d2 = cand_d2_np
    cdef cnp.int16_t[:, :, ::1] cand_next = cand_next_np
    cdef cnp.int64_t[:, ::1] cand_cnt = cand_cnt_np

    cdef int i, k, b, s, lab, cnt, best_b, n_gated = 0
    cdef double pr, pi, hr, hi, dre, dim, d2, best_d2
    cdef double hyr, hyi

    for i in range(n_surv):
        for k in range(K):
            s = states[i, k]
            hr = h_re[k]
            hi = h_im[k]
            cnt = 0
            best_b = 0
            best_d2 = -1.0
            for b in range(n_b):
                lab = feas_label[s, b]
                pr = p_re[k, lab]
                pi = p_im[k, lab]
                hyr = hr * pr - hi * pi
                hyi = hr * pi + hi * pr
                dre = y_re[k] - hyr
                dim = y_im[k] - hyi
                d2 = dre * dre + dim * dim
                if best_d2 < 0.0 or d2 < best_d2:
                    best_d2 = d2
                    best_b = b
                if gate2 < 0.0 or d2 <= gate2:
                    cand_word[i, k, cnt] = <cnp.int16_t> b
                    cand_d2[i, k, cnt] = d2
                    cand_next[i, k, cnt] = next_by_b[s, b]
                    cnt += 1
            if cnt == 0:
                # fallback: nearest feasible point, lowest b on ties
                lab = feas_label[s, best_b]
                pr = p_re[k, lab]
                pi = p_im[k, lab]
                hyr = hr * pr - hi * pi
                hyi = hr * pi + hi * pr
                dre = y_re[k] - hyr
                dim = y_im[k] - hyi
                cand_word[i, k, 0] = <cnp.int16_t> best_b
                cand_d2[i, k, 0] = dre * dre + dim * dim
                cand_next[i, k, 0] = next_by_b[s, best_b]
                cnt = 1
                n_gated += 1
            cand_cnt[i, k] = cnt

    # DFS over tones with incremental user-bit consistency.
    cdef int cap = 4096
    out_metric_np = np.empty(cap, dtype=np.float64)
    out_bits_np = np.empty(cap, dtype=np.int64)
    out_next_np = np.empty(cap, dtype=np.int64)
    out_prev_np = np.empty(cap, dtype=np.int64)
    cdef double[::1] om = out_metric_np
    cdef cnp.int64_t[::1] ob = out_bits_np
    cdef cnp.int64_t[::1] on = out_next_np
    cdef cnp.int64_t[::1] op = out_prev_np
    cdef int n_out = 0

    cdef cnp.int64_t[::1] choice = np.zeros(K, dtype=np.int64)
    cdef double[::1] acc_metric = np.zeros(K + 1, dtype=np.float64)
    cdef cnp.int64_t[::1] acc_bits = np.zeros(K + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] acc_next = np.zeros(K + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] user_bits = np.empty(n_users, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] touched = np.zeros((K, d_f), dtype=np.int64)
    cdef cnp.int64_t[::1] n_touched = np.zeros(K, dtype=np.int64)

    cdef int depth, ci, j, uid, u, ok
    cdef long long word

    for i in range(n_surv):
        for j in range(n_users):
            user_bits[j] = -1
        depth = 0
        choice[0] = 0
        acc_metric[0] = metrics[i]
        acc_bits[0] = 0
        acc_next[0] = 0
        while True:
            if choice[depth] >= cand_cnt[i, depth]:
                if depth == 0:
                    break
                depth -= 1
                for j in range(n_touched[depth]):
                    user_bits[touched[depth, j]] = -1
                n_touched[depth] = 0
                choice[depth] += 1
                continue
            ci = <int> choice[depth]
            word = cand_word[i, depth, ci]
            ok = 1
            n_touched[depth] = 0
            for j in range(d_f):
                uid = <int> slice_user[depth, j]
                u = <int> ((word >> slice_shift[depth, j]) & qmask)
                if user_bits[uid] < 0:
                    user_bits[uid] = u
                    touched[depth, n_touched[depth]] = uid
                    n_touched[depth] += 1
                elif user_bits[uid] != u:
                    ok = 0
                    break
            if not ok:
                for j in range(n_touched[depth]):
                    user_bits[touched[depth, j]] = -1
                n_touched[depth] = 0
                choice[depth] += 1
                continue
            acc_metric[depth + 1] = acc_metric[depth] + cand_d2[i, depth, ci]
            acc_bits[depth + 1] = acc_bits[depth] | (
                word << ((K - 1 - depth) * bits_per_tone)
            )
            acc_next[depth + 1] = acc_next[depth] | (
                (<long long> cand_next[i, depth, ci]) << ((K - 1 - depth) * state_bits)
            )
            if depth == K - 1:
                if n_out == cap:
                    cap *= 2
                    out_metric_np = np.resize(out_metric_np, cap)
                    out_bits_np = np.resize(out_bits_np, cap)
                    out_next_np = np.resize(out_next_np, cap)
                    out_prev_np = np.resize(out_prev_np, cap)
                    om = out_metric_np
                    ob = out_bits_np
                    on = out_next_np
                    op = out_prev_np
                om[n_out] = acc_metric[depth + 1]
                ob[n_out] = acc_bits[depth + 1]
                on[n_out] = acc_next[depth + 1]
                op[n_out] = i
                n_out += 1
                for j in range(n_touched[depth]):
                    user_bits[touched[depth, j]] = -1
                n_touched[depth] = 0
                choice[depth] += 1
            else:
                depth += 1
                choice[depth] = 0
    return (
        out_metric_np[:n_out].copy(),
        out_bits_np[:n_out].copy(),
        out_next_np[:n_out].copy(),
        out_prev_np[:n_out].copy(),
        n_gated,
    )
