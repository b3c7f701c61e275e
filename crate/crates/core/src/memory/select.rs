use super::{HerdingRank, MemoryLedger};

/// Sample indices of one class split by how they are kept.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Selection {
    pub real: Vec<usize>,
    pub prompts: Vec<usize>,
    pub discarded: Vec<usize>,
}

/// The first `R` ranked samples stay as images, the next `S` become
/// prompts, the rest are dropped. Short classes fill real slots first.
pub fn select_exemplars(rank: &HerdingRank, ledger: &MemoryLedger) -> Selection {
    let r = ledger.real_slots as usize;
    let s = ledger.synthetic_slots as usize;
    let order = &rank.ordering;
    let real_end = r.min(order.len());
    let prompt_end = (r + s).min(order.len());
    Selection {
        real: order[..real_end].to_vec(),
        prompts: order[real_end..prompt_end].to_vec(),
        discarded: order[prompt_end..].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::allocate;

    fn rank(n: usize) -> HerdingRank {
        // deliberately not the identity permutation
        HerdingRank {
            class_id: 0,
            ordering: (0..n).rev().collect(),
        }
    }

    #[test]
    fn underfull_class_is_all_real() {
        let l = allocate(5, 0.2, 18.838).unwrap();
        let s = select_exemplars(&rank(3), &l);
        assert_eq!(
            (s.real.len(), s.prompts.len(), s.discarded.len()),
            (3, 0, 0)
        );
    }

    #[test]
    fn full_class_follows_rank_order() {
        let l = allocate(5, 0.2, 18.838).unwrap();
        let r = rank(100);
        let s = select_exemplars(&r, &l);
        assert_eq!(s.real, r.ordering[..4]);
        assert_eq!(s.prompts, r.ordering[4..22]);
        assert_eq!(s.discarded, r.ordering[22..]);
    }

    #[test]
    fn zero_alpha_is_plain_top_b() {
        let l = allocate(5, 0.0, 24.0).unwrap();
        let r = rank(40);
        let s = select_exemplars(&r, &l);
        assert_eq!(s.real, r.ordering[..5]);
        assert!(s.prompts.is_empty());
    }

    #[test]
    fn partially_filled_prompt_slots() {
        let l = allocate(5, 0.2, 18.838).unwrap();
        let s = select_exemplars(&rank(10), &l);
        assert_eq!(
            (s.real.len(), s.prompts.len(), s.discarded.len()),
            (4, 6, 0)
        );
    }
}
