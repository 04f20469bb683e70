//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! the rayon pool; without it everything runs on the calling thread. Results
//! are identical either way because reductions always use the same fixed
//! chunking and are combined in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of items per reduction chunk. Fixed so that sums never depend on
/// the number of worker threads.
pub const CHUNK: usize = 512;

/// Mixes a master seed with a stream index (splitmix64 finaliser).
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

fn chunk_sum<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> CompensatedSum {
    (lo..hi).map(f).collect()
}

/// Deterministic sum of `f(i)` for `i in 0..n`.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<CompensatedSum> = map(chunks, |c| {
        chunk_sum(c * CHUNK, ((c + 1) * CHUNK).min(n), &f)
    });
    let mut total = CompensatedSum::new();
    for p in &parts {
        total.merge(p);
    }
    total.value()
}

/// `f(i)` for every `i in 0..n`, in order.
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Maps over a slice, preserving order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Runs `f` with at most `jobs` worker threads (`0` keeps the default pool).
pub fn with_jobs<T: Send, F: FnOnce() -> T + Send>(jobs: usize, f: F) -> T {
    #[cfg(feature = "parallel")]
    {
        if jobs == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}
