//! CPU time of the calling thread.
//!
//! Phase timings use this clock so that preemption by other processes does
//! not show up as controller computation time. Platforms without a
//! per-thread clock fall back to wall-clock time.

#[cfg(unix)]
mod imp {
    pub fn now() -> f64 {
        let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
        // SAFETY: `ts` is a valid, writable timespec.
        let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
        if rc != 0 {
            return super::wall();
        }
        ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
    }
}

#[cfg(not(unix))]
mod imp {
    pub fn now() -> f64 {
        super::wall()
    }
}

fn wall() -> f64 {
    use std::sync::OnceLock;
    use std::time::Instant;
    static ORIGIN: OnceLock<Instant> = OnceLock::new();
    ORIGIN.get_or_init(Instant::now).elapsed().as_secs_f64()
}

#[derive(Debug, Clone, Copy)]
pub struct Stopwatch(f64);

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(imp::now())
    }

    /// Seconds since `start`.
    pub fn elapsed(&self) -> f64 {
        (imp::now() - self.0).max(0.0)
    }
}
