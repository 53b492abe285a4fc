//! One-to-one assignment: greedy against the optimal (Hungarian) solution
//! on a small matrix where they disagree.

use mpprl::assignment::{greedy, hungarian, SimilarityMatrix};

fn main() {
    let m = SimilarityMatrix::from_rows(&[vec![1.0, 0.9, 0.0], vec![0.9, 0.7, 0.0], vec![0.0, 0.0, 0.8]]);
    let g = greedy(&m, &[0, 1, 2]);
    let h = hungarian(&m);
    println!("greedy  {:?} total {:.1}", g.pairs, g.total_similarity);
    println!("optimal {:?} total {:.1}", h.pairs, h.total_similarity);
}
