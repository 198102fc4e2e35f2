/// ℓ2 projection onto nondecreasing sequences by pool-adjacent-violators.
///
/// Inputs that are already nondecreasing come back bit-for-bit unchanged.
pub fn monotone_project(values: &[f64]) -> Vec<f64> {
    // (sum, count) per pooled block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 > s1 / n1 as f64 {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last] = (s0 + s1, n0 + n1);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (sum, count) in blocks {
        let mean = sum / count as f64;
        out.extend(std::iter::repeat(mean).take(count));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn already_monotone() {
        assert_eq!(monotone_project(&[0.0, 1.0, 2.0]), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn pools_violating_pair() {
        assert_eq!(monotone_project(&[0.0, 2.0, 1.0]), vec![0.0, 1.5, 1.5]);
    }

    #[test]
    fn full_pool() {
        assert_eq!(monotone_project(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn cascading_merge() {
        assert_eq!(monotone_project(&[1.0, 3.0, 2.0, 0.0]), vec![1.0, 5.0 / 3.0, 5.0 / 3.0, 5.0 / 3.0]);
    }
}
