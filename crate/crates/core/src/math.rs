//! Small fixed-size linear algebra for the 4-state lateral model plus the
//! dense kernels shared by the network code.

/// 4-vector over the state order `[phi, p, beta, r]`.
pub type Vec4 = [f64; 4];
/// 2-vector over the input order `[delta_a, delta_r]`.
pub type Vec2 = [f64; 2];
/// 4x4 matrix, row major.
pub type Mat4 = [[f64; 4]; 4];
/// 4x2 matrix, row major.
pub type Mat4x2 = [[f64; 2]; 4];

pub fn mat4_vec(m: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(m.iter()) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    out
}

pub fn mat4x2_vec(m: &Mat4x2, v: &Vec2) -> Vec4 {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(m.iter()) {
        *o = row[0] * v[0] + row[1] * v[1];
    }
    out
}

pub fn add4(a: &Vec4, b: &Vec4) -> Vec4 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn scale4(a: &Vec4, s: f64) -> Vec4 {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

pub fn neg4(a: &Vec4) -> Vec4 {
    [-a[0], -a[1], -a[2], -a[3]]
}

pub fn inf_norm4(a: &Vec4) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn identity4() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// Dense dot product with two independent 8-lane accumulator blocks. The
/// split breaks the floating-point dependency chain so the loop can use
/// wide registers; the summation order is fixed by the code, so results
/// stay bit-reproducible run to run.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc0 = [0.0_f64; 8];
    let mut acc1 = [0.0_f64; 8];
    let big = a.len() / 16 * 16;
    let (a_head, a_rest) = a.split_at(big);
    let (b_head, b_rest) = b.split_at(big);
    for (ca, cb) in a_head.chunks_exact(16).zip(b_head.chunks_exact(16)) {
        for k in 0..8 {
            acc0[k] += ca[k] * cb[k];
        }
        for k in 0..8 {
            acc1[k] += ca[8 + k] * cb[8 + k];
        }
    }
    let mid = a_rest.len() / 8 * 8;
    let (a8, a_tail) = a_rest.split_at(mid);
    let (b8, b_tail) = b_rest.split_at(mid);
    for (ca, cb) in a8.chunks_exact(8).zip(b8.chunks_exact(8)) {
        for k in 0..8 {
            acc0[k] += ca[k] * cb[k];
        }
    }
    let mut rest = 0.0;
    for (x, y) in a_tail.iter().zip(b_tail.iter()) {
        rest += x * y;
    }
    let mut lane = [0.0_f64; 8];
    for k in 0..8 {
        lane[k] = acc0[k] + acc1[k];
    }
    let mut half = [0.0_f64; 4];
    for k in 0..4 {
        half[k] = lane[k] + lane[k + 4];
    }
    ((half[0] + half[2]) + (half[1] + half[3])) + rest
}

/// Four dot products against a shared left-hand side, computed together so
/// each `row` element is loaded once. Per-output summation order is fixed
/// (four 4-lane accumulators reduced pairwise).
#[inline]
pub fn dot4(row: &[f64], x0: &[f64], x1: &[f64], x2: &[f64], x3: &[f64]) -> [f64; 4] {
    let len = row.len();
    debug_assert!(x0.len() == len && x1.len() == len && x2.len() == len && x3.len() == len);
    let mut a0 = [0.0_f64; 4];
    let mut a1 = [0.0_f64; 4];
    let mut a2 = [0.0_f64; 4];
    let mut a3 = [0.0_f64; 4];
    let big = len / 4 * 4;
    for o in (0..big).step_by(4) {
        for k in 0..4 {
            let r = row[o + k];
            a0[k] += r * x0[o + k];
            a1[k] += r * x1[o + k];
            a2[k] += r * x2[o + k];
            a3[k] += r * x3[o + k];
        }
    }
    let mut out = [
        (a0[0] + a0[2]) + (a0[1] + a0[3]),
        (a1[0] + a1[2]) + (a1[1] + a1[3]),
        (a2[0] + a2[2]) + (a2[1] + a2[3]),
        (a3[0] + a3[2]) + (a3[1] + a3[3]),
    ];
    for o in big..len {
        let r = row[o];
        out[0] += r * x0[o];
        out[1] += r * x1[o];
        out[2] += r * x2[o];
        out[3] += r * x3[o];
    }
    out
}

/// `y += s * x` over equal-length slices.
#[inline]
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += s * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..67).map(|i| (i as f64) * 0.25 - 3.0).collect();
        let b: Vec<f64> = (0..67).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let naive: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn mat4_vec_matches_triple_loop() {
        let m: Mat4 = [
            [1.0, 2.0, 3.0, 4.0],
            [-1.0, 0.5, 0.0, 2.0],
            [0.0, 0.0, 1.0, -1.0],
            [3.0, -2.0, 1.0, 0.5],
        ];
        let v = [0.5, -1.0, 2.0, 1.5];
        let mut expect = [0.0; 4];
        for i in 0..4 {
            for j in 0..4 {
                expect[i] += m[i][j] * v[j];
            }
        }
        assert_eq!(mat4_vec(&m, &v), expect);
    }
}
