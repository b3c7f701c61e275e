//! Brute-force greedy herding: every candidate mean is recomputed from the
//! full list of picks, with no running state carried between steps.

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / norm).collect()
    }
}

pub fn brute_force_herding(vectors: &[Vec<f64>]) -> Vec<usize> {
    let n = vectors.len();
    let d = vectors[0].len();
    let phi: Vec<Vec<f64>> = vectors.iter().map(|v| normalized(v)).collect();
    let mut mu = vec![0.0; d];
    for p in &phi {
        for (m, x) in mu.iter_mut().zip(p) {
            *m += x;
        }
    }
    for m in &mut mu {
        *m /= n as f64;
    }

    let mut picked: Vec<usize> = Vec::new();
    for k in 1..=n {
        let mut best: Option<(usize, f64)> = None;
        for cand in 0..n {
            if picked.contains(&cand) {
                continue;
            }
            let mut sum = vec![0.0; d];
            for &p in &picked {
                for (s, x) in sum.iter_mut().zip(&phi[p]) {
                    *s += x;
                }
            }
            let dist: f64 = (0..d)
                .map(|j| {
                    let mean = (phi[cand][j] + sum[j]) / k as f64;
                    (mu[j] - mean).powi(2)
                })
                .sum();
            if best.is_none_or(|(_, b)| dist < b) {
                best = Some((cand, dist));
            }
        }
        picked.push(best.unwrap().0);
    }
    picked
}
