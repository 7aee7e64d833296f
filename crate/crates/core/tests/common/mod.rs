//! Curve coordinates read off the published figures. Rates are in bits per
//! channel use, 0.25 to 0.75 in steps of 0.05.

#![allow(dead_code)]

pub const RATES_BITS: [f64; 11] = [0.25, 0.30, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.75];

pub const GALLAGER: [(usize, [f64; 11]); 3] = [
    (50, [0.000624627, 0.00290582, 0.0105345, 0.0310782, 0.076987, 0.163529, 0.302026, 0.489344, 0.698883, 0.881017, 0.981398]),
    (75, [8.13177e-5, 0.000614999, 0.00324139, 0.0128583, 0.0403769, 0.103789, 0.223285, 0.407658, 0.636352, 0.850843, 0.975434]),
    (100, [1.35385e-5, 0.000163962, 0.00122813, 0.00635319, 0.0244339, 0.0734126, 0.178083, 0.35614, 0.594018, 0.829353, 0.971017]),
];

pub const RARE: [(usize, [f64; 11]); 3] = [
    (50, [0.000792121, 0.00353258, 0.0122949, 0.0349733, 0.0839249, 0.173525, 0.313498, 0.499286, 0.704336, 0.881136, 0.979541]),
    (75, [0.000100155, 0.000732905, 0.00373933, 0.0143839, 0.0439147, 0.11012, 0.231987, 0.416473, 0.642044, 0.851627, 0.973924]),
    (100, [1.62288e-5, 0.000191721, 0.00139895, 0.00705018, 0.0264491, 0.0776962, 0.184833, 0.363783, 0.599496, 0.830454, 0.969766]),
];

pub const EXACT_ML: [(usize, [f64; 11]); 2] = [
    (50, [0.000178344, 0.00067079, 0.00214493, 0.00591513, 0.0143075, 0.0308196, 0.0601084, 0.107283, 0.175714, 0.267464, 0.383104]),
    (75, [6.89775e-6, 4.99e-5, 0.000276952, 0.00120856, 0.00428744, 0.0127238, 0.0323583, 0.0716219, 0.139908, 0.243539, 0.380866]),
];

pub const EXACT_MD: [(usize, [f64; 11]); 2] = [
    (50, [0.000314153, 0.00115953, 0.00365273, 0.00998224, 0.0235163, 0.0480992, 0.087804, 0.149932, 0.2495, 0.344088, 0.445695]),
    (75, [1.53958e-5, 0.000110869, 0.000609978, 0.00273185, 0.00855393, 0.0250595, 0.0599197, 0.115746, 0.203125, 0.322932, 0.469847]),
];

/// Crossovers and rare-transition constants that reproduce the bound curves.
pub const EPS_G: f64 = 0.01;
pub const EPS_B: f64 = 0.1;
pub const N_ALPHA: f64 = 4.0;
pub const N_BETA: f64 = 6.0;

/// Fixed transition probabilities of the exact-value curves.
pub const ALPHA_FIXED: f64 = 0.0533;
pub const BETA_FIXED: f64 = 0.08;

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}
