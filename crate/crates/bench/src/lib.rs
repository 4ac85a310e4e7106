//! Benchmark fixtures.

use cplx_core::{BetaDist, TypeCounts};

/// (inspected, repaired) for the 35 weld types of the case study.
pub const WELD_COUNTS: [(u64, u64); 35] = [
    (7475, 249),
    (4495, 173),
    (3518, 43),
    (3078, 66),
    (4722, 400),
    (3705, 70),
    (2302, 51),
    (1774, 28),
    (2302, 26),
    (1055, 41),
    (1131, 30),
    (1069, 34),
    (1484, 16),
    (1318, 10),
    (555, 21),
    (271, 38),
    (638, 5),
    (510, 5),
    (592, 17),
    (333, 5),
    (529, 14),
    (666, 31),
    (175, 12),
    (217, 6),
    (452, 17),
    (364, 6),
    (271, 2),
    (512, 6),
    (572, 3),
    (422, 13),
    (149, 9),
    (171, 4),
    (154, 4),
    (204, 13),
    (634, 9),
];

pub fn weld_counts() -> Vec<TypeCounts> {
    WELD_COUNTS
        .iter()
        .enumerate()
        .map(|(i, &(n, x))| TypeCounts::new((i + 1).to_string(), n, x))
        .collect()
}

/// `n` posteriors cycling through the weld counts, with distinct labels.
pub fn posteriors(n: usize) -> Vec<(String, BetaDist)> {
    (0..n)
        .map(|i| {
            let (inspected, repaired) = WELD_COUNTS[i % WELD_COUNTS.len()];
            let bump = (i / WELD_COUNTS.len()) as f64;
            let d = BetaDist::new(
                repaired as f64 + 0.5 + bump,
                (inspected - repaired) as f64 + 0.5,
            )
            .expect("positive shapes");
            (format!("t{i}"), d)
        })
        .collect()
}
