//! Fixed workloads shared by the benchmarks.

use isoperim_core::oracle::random_element_of_n;
use isoperim_core::word::Word;

/// Seeded elements of N, products of up to `k_max` conjugates of `r^±1`
/// with conjugators of length at most `g_max`.
pub fn corpus(count: u64, k_max: usize, g_max: usize) -> Vec<Word> {
    (0..count).map(|seed| random_element_of_n(seed, k_max, g_max)).collect()
}
