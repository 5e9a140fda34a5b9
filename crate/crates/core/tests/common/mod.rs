//! Independent dense reference built from Pauli Kronecker products.

#![allow(dead_code)]

use filtered_tpq::Complex64;

pub type Dense = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli(k: char) -> Dense {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    match k {
        'I' => vec![vec![o, z], vec![z, o]],
        'X' => vec![vec![z, o], vec![o, z]],
        'Y' => vec![vec![z, c(0.0, -1.0)], vec![c(0.0, 1.0), z]],
        'Z' => vec![vec![o, z], vec![z, -o]],
        _ => unreachable!(),
    }
}

/// `A (x) B` where `B` acts on the lower-order bits.
pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (na, nb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); na * nb]; na * nb];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Tensor product with `ops[q]` acting on qubit `q` (bit `q` of the index).
pub fn string(ops: &[char]) -> Dense {
    let mut m = pauli(ops[0]);
    for &op in &ops[1..] {
        m = kron(&pauli(op), &m);
    }
    m
}

pub fn add_scaled(acc: &mut Dense, m: &Dense, s: f64) {
    for (ra, rm) in acc.iter_mut().zip(m) {
        for (a, b) in ra.iter_mut().zip(rm) {
            *a += b * s;
        }
    }
}

pub fn zeros(d: usize) -> Dense {
    vec![vec![c(0.0, 0.0); d]; d]
}

/// `J sum_bonds (XX + YY + ZZ + II) / 2`.
pub fn swap_hamiltonian(n: usize, j: f64, bonds: &[(usize, usize)]) -> Dense {
    let mut h = zeros(1 << n);
    for &(p, q) in bonds {
        for k in ['X', 'Y', 'Z', 'I'] {
            let mut ops = vec!['I'; n];
            ops[p] = k;
            ops[q] = k;
            add_scaled(&mut h, &string(&ops), 0.5 * j);
        }
    }
    h
}

/// `J sum_bonds S_i . S_j` with `S = sigma / 2`.
pub fn spin_hamiltonian(n: usize, j: f64, bonds: &[(usize, usize)]) -> Dense {
    let mut h = zeros(1 << n);
    for &(p, q) in bonds {
        for k in ['X', 'Y', 'Z'] {
            let mut ops = vec!['I'; n];
            ops[p] = k;
            ops[q] = k;
            add_scaled(&mut h, &string(&ops), 0.25 * j);
        }
    }
    h
}

pub fn apply(m: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Lowest eigenvalue of a real-symmetric dense matrix by cyclic Jacobi.
pub fn min_eigenvalue_real(m: &Dense) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-22 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}
