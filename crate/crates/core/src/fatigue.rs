//! Fatigue lives (thousands of cycles) of 6061-T6 aluminium coupons at a
//! maximum stress of 31,000 psi, as listed in Birnbaum and Saunders (1969).
//!
//! The source describes 101 coupons; this is the 100-value listing commonly
//! reproduced. Callers that report on this set should surface its length.

pub const FATIGUE_LIFE: [f64; 100] = [
    70.0, 90.0, 96.0, 97.0, 99.0, 100.0, 103.0, 104.0, 104.0, 105.0,
    107.0, 108.0, 108.0, 108.0, 109.0, 109.0, 112.0, 112.0, 113.0, 114.0,
    114.0, 114.0, 116.0, 119.0, 120.0, 120.0, 120.0, 121.0, 121.0, 123.0,
    124.0, 124.0, 124.0, 124.0, 124.0, 128.0, 128.0, 129.0, 129.0, 130.0,
    130.0, 130.0, 131.0, 131.0, 131.0, 131.0, 131.0, 132.0, 132.0, 132.0,
    133.0, 134.0, 134.0, 134.0, 134.0, 136.0, 136.0, 137.0, 138.0, 138.0,
    138.0, 139.0, 139.0, 141.0, 141.0, 142.0, 142.0, 142.0, 142.0, 142.0,
    142.0, 144.0, 144.0, 145.0, 146.0, 148.0, 148.0, 149.0, 151.0, 151.0,
    152.0, 155.0, 156.0, 157.0, 157.0, 157.0, 157.0, 158.0, 159.0, 162.0,
    163.0, 163.0, 164.0, 166.0, 166.0, 168.0, 170.0, 174.0, 201.0, 212.0,
];
