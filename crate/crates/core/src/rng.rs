/// Derives the seed of work item `index` from a parent seed.
///
/// SplitMix64 over `parent ^ (index * golden)`: distinct indices give
/// well-separated streams, and the mapping does not depend on how the work
/// is scheduled, so serial and parallel runs draw identical numbers.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    let mut z = parent ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
