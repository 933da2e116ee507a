//! Exact dense simplex for `max c·x` subject to `Ax ≤ b`, `x ≥ 0`, `b ≥ 0`.
//!
//! The origin is feasible, so the slack basis starts the method; Bland's rule
//! keeps it finite.

use crate::rat::Rat;

/// Optimal value, or `None` when the program is unbounded.
pub fn maximize(c: &[Rat], a: &[Vec<Rat>], b: &[Rat]) -> Option<Rat> {
    maximize_point(c, a, b).map(|(v, _)| v)
}

/// Optimal value together with an optimal vertex.
pub fn maximize_point(c: &[Rat], a: &[Vec<Rat>], b: &[Rat]) -> Option<(Rat, Vec<Rat>)> {
    let m = a.len();
    let n = c.len();
    debug_assert!(b.iter().all(|v| !v.is_negative()));
    // Tableau rows: [A | I | b]; objective row holds reduced costs -c.
    let width = n + m + 1;
    let mut t: Vec<Vec<Rat>> = (0..m)
        .map(|i| {
            let mut row = vec![Rat::zero(); width];
            row[..n].clone_from_slice(&a[i]);
            row[n + i] = Rat::one();
            row[width - 1] = b[i].clone();
            row
        })
        .collect();
    let mut obj: Vec<Rat> = vec![Rat::zero(); width];
    for j in 0..n {
        obj[j] = -&c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        let Some(enter) = (0..width - 1).find(|&j| obj[j].is_negative()) else {
            let mut x = vec![Rat::zero(); n];
            for (i, &j) in basis.iter().enumerate() {
                if j < n {
                    x[j] = t[i][width - 1].clone();
                }
            }
            return Some((obj[width - 1].clone(), x));
        };
        let mut leave: Option<(usize, Rat)> = None;
        for i in 0..m {
            if t[i][enter].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][enter];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let (r, _) = leave?;
        let piv = t[r][enter].recip();
        for v in t[r].iter_mut() {
            *v *= &piv;
        }
        let prow = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (x, p) in row.iter_mut().zip(&prow) {
                    if !p.is_zero() {
                        *x -= &(&f * p);
                    }
                }
            }
        }
        if !obj[enter].is_zero() {
            let f = obj[enter].clone();
            for (x, p) in obj.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x -= &(&f * p);
                }
            }
        }
        basis[r] = enter;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    #[test]
    fn small_programs() {
        // max x + y, x ≤ 1, y ≤ 1, (x + y)/2 ≤ 1
        let a = vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)], vec![q(1, 2), q(1, 2)]];
        let b = vec![q(1, 1); 3];
        assert_eq!(maximize(&[q(1, 1), q(1, 1)], &a, &b), Some(q(2, 1)));
        // max x + y, x + 3y ≤ 3, 3x + y ≤ 3
        let a = vec![vec![q(1, 1), q(3, 1)], vec![q(3, 1), q(1, 1)]];
        assert_eq!(maximize(&[q(1, 1), q(1, 1)], &a, &[q(3, 1), q(3, 1)]), Some(q(3, 2)));
        assert_eq!(maximize(&[q(1, 1)], &[vec![q(-1, 1)]], &[q(1, 1)]), None);
        let (v, x) = maximize_point(&[q(1, 1), q(1, 1)], &a, &[q(3, 1), q(3, 1)]).unwrap();
        assert_eq!(v, q(3, 2));
        assert_eq!(x, vec![q(3, 4), q(3, 4)]);
    }
}
