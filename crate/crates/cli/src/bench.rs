//! `bench`: steps per second on the primality program.
//!
//! Each machine runs the program to completion and starts over until the
//! time budget is spent, so the figure covers the whole program rather than
//! a hot loop.

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use tea_asm::{corpus, emit_isa, emit_ma};
use tea_isa::det_step_mut;
use tea_ma::{ma_step, MaParams};

use crate::args::BenchArgs;
use crate::{code, load_params};

/// Steps between clock reads.
const CHUNK: u64 = 1024;

#[derive(Clone, Copy, Debug)]
pub struct Throughput {
    pub steps: u64,
    pub elapsed: Duration,
}

impl Throughput {
    pub fn per_second(&self) -> f64 {
        self.steps as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BenchResult {
    pub ma: Throughput,
    pub isa: Throughput,
    /// Completed runs of the program on each machine.
    pub ma_runs: u64,
    pub isa_runs: u64,
}

impl BenchResult {
    pub fn ratio(&self) -> f64 {
        self.isa.per_second() / self.ma.per_second().max(1e-9)
    }
}

pub fn bench(n: u32, params: MaParams, budget: Duration) -> BenchResult {
    let p = corpus::primality_of(n);

    let fresh_ma = emit_ma(&p, Arc::new(params));
    let (mut s, mut steps, mut ma_runs) = (fresh_ma.clone(), 0u64, 0u64);
    let start = Instant::now();
    while start.elapsed() < budget {
        for _ in 0..CHUNK {
            if s.halted() {
                s = fresh_ma.clone();
                ma_runs += 1;
            }
            s = ma_step(&s);
        }
        steps += CHUNK;
    }
    let ma = Throughput { steps, elapsed: start.elapsed() };

    let fresh_isa = emit_isa(&p);
    let (mut w, mut steps, mut isa_runs) = (fresh_isa.clone(), 0u64, 0u64);
    let start = Instant::now();
    while start.elapsed() < budget {
        for _ in 0..CHUNK {
            if w.halt {
                w.clone_from(&fresh_isa);
                isa_runs += 1;
            }
            det_step_mut(&mut w);
        }
        steps += CHUNK;
    }
    let isa = Throughput { steps, elapsed: start.elapsed() };
    BenchResult { ma, isa, ma_runs, isa_runs }
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    anyhow::ensure!(args.seconds > 0.0, "--seconds must be positive");
    let params = load_params(args.params.params.as_deref(), &args.params.set)?;
    let r = bench(args.n, params, Duration::from_secs_f64(args.seconds));
    writeln!(out, "primality of {}", args.n)?;
    writeln!(out, "ma   {:>12.0} steps/s ({} steps, {} runs)", r.ma.per_second(), r.ma.steps, r.ma_runs)?;
    writeln!(out, "isa  {:>12.0} steps/s ({} steps, {} runs)", r.isa.per_second(), r.isa.steps, r.isa_runs)?;
    writeln!(out, "isa/ma {:.1}x", r.ratio())?;
    Ok(code::OK)
}
