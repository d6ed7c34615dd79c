//! Small reference matrices shared by the tests and the command line.

use crate::model::PairOrderMatrix;

/// Precedence matrix of PrefLib dataset 4-2 (three items), as published
/// to four decimals.
pub fn dataset_4_2() -> PairOrderMatrix {
    PairOrderMatrix::from_rows(&[
        vec![0.5000, 0.7046, 0.4934],
        vec![0.2954, 0.5000, 0.3790],
        vec![0.5066, 0.6210, 0.5000],
    ])
    .expect("dataset 4-2 matrix is a valid pair order matrix")
}

/// Four items split into two blocks `{1,2}` and `{3,4}`, with 60% of voters
/// ranking the first block ahead.
pub fn food_matrix() -> PairOrderMatrix {
    PairOrderMatrix::from_rows(&[
        vec![0.5, 0.5, 0.6, 0.6],
        vec![0.5, 0.5, 0.6, 0.6],
        vec![0.4, 0.4, 0.5, 0.5],
        vec![0.4, 0.4, 0.5, 0.5],
    ])
    .expect("food matrix is a valid pair order matrix")
}
