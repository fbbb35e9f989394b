//! The inner loop of every hypothesis scan: the mass a sign vector puts on
//! its `+1` positions.

/// `sum_{j : bit j of words set} w[j]`.
pub(crate) fn plus_mass(words: &[u64], w: &[f64]) -> f64 {
    debug_assert!(words.len() >= w.len().div_ceil(64));
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            // SAFETY: the feature was detected at runtime
            return unsafe { plus_mass_avx512(words, w) };
        }
    }
    plus_mass_fallback(words, w)
}

fn plus_mass_fallback(words: &[u64], w: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    for (chunk, &bits) in w.chunks(64).zip(words) {
        for (lane, &x) in chunk.iter().enumerate() {
            // multiply by 0 or 1 keeps the loop branch-free
            acc[lane % 8] += x * ((bits >> lane) & 1) as f64;
        }
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn plus_mass_avx512(words: &[u64], w: &[f64]) -> f64 {
    use std::arch::x86_64::*;
    let full = w.len() / 64;
    let mut acc = [_mm512_setzero_pd(); 4];
    let p = w.as_ptr();
    for (c, &bits) in words[..full].iter().enumerate() {
        let base = p.add(c * 64);
        for q in 0..8 {
            let k = (bits >> (8 * q)) as u8;
            let x = _mm512_loadu_pd(base.add(8 * q));
            acc[q & 3] = _mm512_mask_add_pd(acc[q & 3], k, acc[q & 3], x);
        }
    }
    let mut total = _mm512_reduce_add_pd(_mm512_add_pd(_mm512_add_pd(acc[0], acc[1]), _mm512_add_pd(acc[2], acc[3])));
    if full * 64 < w.len() {
        total += plus_mass_fallback(&words[full..], &w[full * 64..]);
    }
    total
}

/// [`plus_mass`] for several sign vectors at once, sharing each load of
/// `w` between them.
pub(crate) fn plus_mass_many(words: &[&[u64]], w: &[f64], out: &mut [f64]) {
    debug_assert_eq!(words.len(), out.len());
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            for (ws, o) in words.chunks(4).zip(out.chunks_mut(4)) {
                if ws.len() == 4 {
                    // SAFETY: the feature was detected at runtime
                    let r = unsafe { plus_mass4_avx512([ws[0], ws[1], ws[2], ws[3]], w) };
                    o.copy_from_slice(&r);
                } else {
                    for (x, o) in ws.iter().zip(o) {
                        *o = plus_mass(x, w);
                    }
                }
            }
            return;
        }
    }
    for (x, o) in words.iter().zip(out) {
        *o = plus_mass_fallback(x, w);
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn plus_mass4_avx512(words: [&[u64]; 4], w: &[f64]) -> [f64; 4] {
    use std::arch::x86_64::*;
    let full = w.len() / 64;
    let mut acc = [[_mm512_setzero_pd(); 2]; 4];
    let p = w.as_ptr();
    for c in 0..full {
        let base = p.add(c * 64);
        let bits = [words[0][c], words[1][c], words[2][c], words[3][c]];
        for q in 0..8 {
            let x = _mm512_loadu_pd(base.add(8 * q));
            for (a, b) in acc.iter_mut().zip(bits) {
                let k = (b >> (8 * q)) as u8;
                a[q & 1] = _mm512_mask_add_pd(a[q & 1], k, a[q & 1], x);
            }
        }
    }
    let mut out = [0.0; 4];
    for (j, a) in acc.iter().enumerate() {
        out[j] = _mm512_reduce_add_pd(_mm512_add_pd(a[0], a[1]));
        if full * 64 < w.len() {
            out[j] += plus_mass_fallback(&words[j][full..], &w[full * 64..]);
        }
    }
    out
}

/// Lanes summed independently by the single-precision screens; the longest
/// rounding chain is `len / F32_LANES` additions plus the final reduction.
pub(crate) const F32_LANES: usize = 32;

/// Absolute error bound of [`plus_mass_many_f32`] on weights summing to at
/// most one, counting the conversion of each weight to `f32`.
pub(crate) fn f32_screen_error(len: usize) -> f64 {
    (len / F32_LANES + 16) as f64 * f64::from(f32::EPSILON)
}

/// [`plus_mass_many`] on single-precision weights. Only a screen: the result
/// is within [`f32_screen_error`] of the exact sum.
pub(crate) fn plus_mass_many_f32(words: &[&[u64]], w: &[f32], out: &mut [f64]) {
    debug_assert_eq!(words.len(), out.len());
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx512f") {
            for (ws, o) in words.chunks(4).zip(out.chunks_mut(4)) {
                let mut four = [ws[0]; 4];
                four[..ws.len()].copy_from_slice(ws);
                // SAFETY: the feature was detected at runtime
                let r = unsafe { plus_mass4_f32_avx512(four, w) };
                o.copy_from_slice(&r[..ws.len()]);
            }
            return;
        }
    }
    for (x, o) in words.iter().zip(out) {
        *o = plus_mass_f32_fallback(x, w);
    }
}

fn plus_mass_f32_fallback(words: &[u64], w: &[f32]) -> f64 {
    let mut acc = [0.0f32; F32_LANES];
    for (chunk, &bits) in w.chunks(64).zip(words) {
        for (lane, &x) in chunk.iter().enumerate() {
            acc[lane % F32_LANES] += x * ((bits >> lane) & 1) as f32;
        }
    }
    acc.iter().map(|&a| f64::from(a)).sum()
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn plus_mass4_f32_avx512(words: [&[u64]; 4], w: &[f32]) -> [f64; 4] {
    use std::arch::x86_64::*;
    let full = w.len() / 64;
    let mut acc = [[_mm512_setzero_ps(); 2]; 4];
    let p = w.as_ptr();
    for c in 0..full {
        let base = p.add(c * 64);
        let bits = [words[0][c], words[1][c], words[2][c], words[3][c]];
        for q in 0..4 {
            let x = _mm512_loadu_ps(base.add(16 * q));
            for (a, b) in acc.iter_mut().zip(bits) {
                let k = (b >> (16 * q)) as u16;
                a[q & 1] = _mm512_mask_add_ps(a[q & 1], k, a[q & 1], x);
            }
        }
    }
    let mut out = [0.0; 4];
    for (j, a) in acc.iter().enumerate() {
        out[j] = f64::from(_mm512_reduce_add_ps(a[0])) + f64::from(_mm512_reduce_add_ps(a[1]));
        if full * 64 < w.len() {
            out[j] += plus_mass_f32_fallback(&words[j][full..], &w[full * 64..]);
        }
    }
    out
}
