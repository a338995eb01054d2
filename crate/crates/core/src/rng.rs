//! Counter-based random streams.
//!
//! Every variate is a pure function of `(seed, stream, id, counter)`, so
//! replaying a run is bit-identical no matter how work is scheduled across
//! threads. The word function chains the SplitMix64 finalizer, which has
//! full avalanche on each application.

/// Purpose tags for derived streams.
pub mod stream {
    pub const COMMON_NOISE: u64 = 1;
    pub const IDIOSYNCRATIC: u64 = 2;
    pub const CLOCK: u64 = 3;
    pub const INITIAL: u64 = 4;
    pub const BRIDGE: u64 = 5;
    pub const PAIR_MC: u64 = 6;
    pub const RUN_DERIVE: u64 = 7;
    pub const MEASURE_PROBE: u64 = 8;
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// One 64-bit word of the stream `(seed, stream, id)` at position `ctr`.
#[inline]
pub fn word(seed: u64, stream: u64, id: u64, ctr: u64) -> u64 {
    let mut z = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    z = mix(z ^ stream.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = mix(z ^ id.wrapping_mul(0x8cb9_2ba7_2f3d_8dd7));
    mix(z ^ ctr.wrapping_mul(0x2545_f491_4f6c_dd1d))
}

/// Uniform in `(0, 1]` (safe under `ln`).
#[inline]
pub fn uniform_oc(seed: u64, stream: u64, id: u64, ctr: u64) -> f64 {
    ((word(seed, stream, id, ctr) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `[0, 1)`.
#[inline]
pub fn uniform_co(seed: u64, stream: u64, id: u64, ctr: u64) -> f64 {
    (word(seed, stream, id, ctr) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box–Muller; consumes counters `2*ctr` and `2*ctr + 1`.
#[inline]
pub fn standard_normal(seed: u64, stream: u64, id: u64, ctr: u64) -> f64 {
    let u1 = uniform_oc(seed, stream, id, 2 * ctr);
    let u2 = uniform_co(seed, stream, id, 2 * ctr + 1);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Both Box–Muller outputs of the draw at `ctr` (independent standard
/// normals); callers that consume normals in pairs get two for the price
/// of one transcendental evaluation.
#[inline]
pub fn standard_normal_pair(seed: u64, stream: u64, id: u64, ctr: u64) -> (f64, f64) {
    let u1 = uniform_oc(seed, stream, id, 2 * ctr);
    let u2 = uniform_co(seed, stream, id, 2 * ctr + 1);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Seed for the `r`-th independent replication of an experiment.
#[inline]
pub fn derive_run_seed(master: u64, r: u64) -> u64 {
    word(master, stream::RUN_DERIVE, r, 0)
}
