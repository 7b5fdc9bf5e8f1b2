//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use piggyback::analysis::{self, to_f64, Q};
use piggyback::framework::{decode_full, Layout};
use piggyback::genpb::GenPiggyback;
use piggyback::mds::{combinations, CodeParams, MdsLayout};
use piggyback::repair::{ErasedView, OpCount, RecoveryClass};
use piggyback::rsr2::Rsr2Code;
use piggyback::sim::{validate_formulas, Cluster, ClusterConfig, Scheme};
use piggyback::Gf256;
use rand::{Rng, SeedableRng};

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Check {
    ensure(elapsed.as_secs_f64() < limit_s, || format!("took {elapsed:?}, limit {limit_s}s"))
}

fn base_grid() -> Vec<(Scheme, usize, usize)> {
    let mut grid = Vec::new();
    for (n, k) in [(8, 4), (10, 5), (12, 8), (20, 10)] {
        let r = n - k;
        for total in 2..=6 {
            for p in 1..total {
                let s = total - p;
                if (r - 1) * p >= s {
                    grid.push((Scheme::Gen { s, p }, n, k));
                }
            }
        }
    }
    for k in [4, 5, 8, 10] {
        for r in 3..=5 {
            grid.push((Scheme::Rsr2, k + r, k));
        }
    }
    grid
}

fn table_one() -> Check {
    let start = Instant::now();
    let expect = [
        (10, 5, 0.5886, 0.6400),
        (20, 10, 0.5341, 0.4867),
        (30, 15, 0.5207, 0.4133),
        (40, 20, 0.5147, 0.3700),
        (50, 25, 0.5114, 0.3344),
        (80, 40, 0.5068, 0.2740),
        (200, 100, 0.5026, 0.1819),
    ];
    let rows = analysis::emit_tables(&analysis::reference_configs(), Default::default())
        .map_err(|e| e.to_string())?;
    for (row, (n, k, g1, g2)) in rows.iter().zip(expect) {
        ensure((row.n, row.k) == (n, k), || format!("row order ({},{})", row.n, row.k))?;
        let got1 = to_f64(row.gamma1.ok_or("missing gamma1")?);
        let got2 = to_f64(row.gamma2);
        ensure((got1 - g1).abs() < 5e-5, || format!("({n},{k}) gamma1 {got1} vs {g1}"))?;
        ensure((got2 - g2).abs() < 5e-5, || format!("({n},{k}) gamma2 {got2} vs {g2}"))?;
    }
    within(start.elapsed(), 1.0)
}

fn measurement_equals_formula() -> Check {
    let start = Instant::now();
    let checks = validate_formulas(&base_grid()).map_err(|e| e.to_string())?;
    for c in &checks {
        ensure(c.matches(), || {
            format!("{:?} ({},{}): measured {} vs {}", c.scheme, c.n, c.k, c.measured, c.analytic)
        })?;
        let k = c.k;
        let alpha = match c.scheme {
            Scheme::Gen { s, p } => s + p,
            Scheme::Rsr2 => 2 * (c.n - k) - 3,
            Scheme::Mds { alpha } => alpha,
        };
        ensure(c.analytic * Q::from_integer((k * k * alpha) as i128) == Q::from_integer(c.total_download as i128), || {
            format!("({},{}) closed-form total is not {}", c.n, k, c.total_download)
        })?;
    }
    within(start.elapsed(), 30.0)
}

fn repair_correctness() -> Check {
    let start = Instant::now();
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xacce);
    let lane = 4;
    for (scheme, n, k) in base_grid() {
        let config = ClusterConfig::new(scheme, n, k).map_err(|e| e.to_string())?;
        // 100 block groups = 100 independent fills
        let len = config.group_bytes(lane) * 100;
        let payload: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let mut c = Cluster::in_memory(config, lane).map_err(|e| e.to_string())?;
        c.ingest(&payload).map_err(|e| e.to_string())?;
        let before: Vec<Vec<u8>> = (0..n).map(|i| node_bytes(&c, i)).collect();
        for (node, expected) in before.iter().enumerate() {
            c.fail_node(node).map_err(|e| e.to_string())?;
            c.repair(node).map_err(|e| e.to_string())?;
            ensure(&node_bytes(&c, node) == expected, || {
                format!("{scheme:?} ({n},{k}) node {node} differs after repair")
            })?;
        }
        ensure(c.read_payload().map_err(|e| e.to_string())? == payload, || "payload changed".into())?;
    }
    within(start.elapsed(), 60.0)
}

fn node_bytes(c: &Cluster, node: usize) -> Vec<u8> {
    let m = c.manifest();
    let mut v = Vec::new();
    for g in 0..m.lane_count {
        for stripe in 0..m.alpha {
            v.extend(c.cell(node, g, stripe).expect("readable cell"));
        }
    }
    v
}

fn mds_exhaustive() -> Check {
    let start = Instant::now();
    let mut rng = rand::rngs::StdRng::seed_from_u64(70);
    let code = CodeParams::new(8, 4).map_err(|e| e.to_string())?;
    let plain = MdsLayout::new(code, 5).map_err(|e| e.to_string())?;
    let rsr = Rsr2Code::new(8, 4).map_err(|e| e.to_string())?;
    let gen = GenPiggyback::with(8, 4, 3, 2).map_err(|e| e.to_string())?;
    fn run<L: Layout>(name: &str, l: &L, rng: &mut impl Rng) -> Check {
        let map = l.cell_map().map_err(|e| e.to_string())?;
        let msgs: Vec<Vec<Gf256>> =
            (0..l.alpha()).map(|_| (0..4).map(|_| Gf256(rng.gen())).collect()).collect();
        let arr = l.encode(&msgs).map_err(|e| e.to_string())?;
        let subsets = combinations(8, 4);
        ensure(subsets.len() == 70, || "expected 70 subsets".into())?;
        for nodes in subsets {
            let got = decode_full(&map, &arr, &nodes).map_err(|e| format!("{name} {nodes:?}: {e}"))?;
            ensure(got == msgs, || format!("{name} {nodes:?} decoded wrong data"))?;
        }
        Ok(())
    }
    run("plain", &plain, &mut rng)?;
    run("rsr2", &rsr, &mut rng)?;
    run("gen", &gen, &mut rng)?;
    within(start.elapsed(), 10.0)
}

fn example_one() -> Check {
    let g = GenPiggyback::with(8, 4, 3, 2).map_err(|e| e.to_string())?;
    let a = g.assignment();
    // (function, cells, Region-D cell); a..e are stripes 0..4, p_j is node 4+j-1
    let expect = [
        (vec![(0, 0), (2, 0)], (5, 3)),
        (vec![(0, 1), (2, 1)], (5, 4)),
        (vec![(0, 2), (2, 2)], (6, 3)),
        (vec![(1, 0), (3, 0)], (6, 4)),
        (vec![(1, 1), (3, 1)], (7, 3)),
        (vec![(1, 2), (3, 2)], (7, 4)),
    ];
    ensure(a.function_count() == 6, || format!("{} functions", a.function_count()))?;
    let map = g.cell_map().map_err(|e| e.to_string())?;
    for (f, (cells, place)) in expect.iter().enumerate() {
        ensure(a.cells_of_func(f) == &cells[..], || format!("function {f} cells {:?}", a.cells_of_func(f)))?;
        ensure(a.placement(f) == *place, || format!("function {f} placed at {:?}", a.placement(f)))?;
        let (node, stripe) = *place;
        let mut row = [Gf256::ZERO; 20];
        for (m, &c) in g.code().parity_row(node - 4).iter().enumerate() {
            row[stripe * 4 + m] = c;
        }
        for &(m, y) in cells {
            row[y * 4 + m] += Gf256::ONE;
        }
        ensure(map.row(node, stripe) == &row[..], || format!("cell ({node},{stripe}) coefficients"))?;
    }
    Ok(())
}

fn sweep_grid() -> Vec<(usize, usize, usize, usize)> {
    let mut v = Vec::new();
    for k in 2..=40 {
        for r in 2..=20 {
            for p in 1..=6 {
                for s in 1..=((r - 1) * p).min(32 - p) {
                    v.push((k + r, k, s, p));
                }
            }
        }
    }
    v
}

fn bounds_and_minimizers() -> Check {
    for (n, k, s, p) in sweep_grid() {
        let g = analysis::gamma2(n, k, s, p).map_err(|e| e.to_string())?;
        let (lo, up) = analysis::bounds(n, k, s, p).map_err(|e| e.to_string())?;
        ensure(lo <= g && g <= up, || format!("({n},{k},{s},{p}) outside bounds"))?;
    }
    for r in 3..=50 {
        let rf = r as f64;
        let (x, v) = analysis::minimize(|x| analysis::gamma_low_f64(rf, x), 0.0, 1.0, 999);
        let x0 = 1.0 - 1.0 / rf.sqrt();
        let v0 = 2.0 / (rf.sqrt() + 1.0);
        ensure((x - x0).abs() < 1e-3, || format!("r={r}: argmin {x} vs {x0}"))?;
        ensure((v - v0).abs() < 1e-9, || format!("r={r}: min {v} vs {v0}"))?;
    }
    Ok(())
}

fn asymptotics() -> Check {
    let r = 10_000usize;
    let g1 = to_f64(analysis::gamma1_min(r));
    ensure((g1 - 0.5).abs() < 1e-4, || format!("min gamma1 {g1}"))?;
    let low = analysis::gamma_low_min(r as f64).1;
    ensure((low - 0.0198).abs() < 1e-4, || format!("min gamma_low {low}"))?;
    for r in 3..=50 {
        let msr = analysis::gamma_msr_half_rate(r);
        ensure(msr == Q::new(2, r as i128) - Q::new(1, (r * r) as i128), || format!("r={r} msr form"))?;
        let low = analysis::gamma_low_min(r as f64).1;
        ensure(to_f64(msr) < low, || format!("r={r}: msr {} not below {low}", to_f64(msr)))?;
    }
    Ok(())
}

fn table_two() -> Check {
    let g = GenPiggyback::with(8, 4, 3, 2).map_err(|e| e.to_string())?;
    let msgs: Vec<Vec<Gf256>> = (0..5).map(|y| (0..4).map(|m| Gf256((y * 4 + m + 1) as u8)).collect()).collect();
    let arr = g.encode(&msgs).map_err(|e| e.to_string())?;
    let (mut pig, mut prot) = ((0, OpCount::default()), (0, OpCount::default()));
    for l in 0..4 {
        let mut view = ErasedView::new(&arr, [l]);
        let (_, rep) = g.repair_systematic(l, &mut view).map_err(|e| e.to_string())?;
        let (n1, o1) = rep.ops_for(RecoveryClass::MdsDecode);
        let (n2, o2) = rep.ops_for(RecoveryClass::PiggybackSum);
        ensure(n1 == 2 && o1 == OpCount::new(8, 6), || format!("node {l}: piggybacked ops {o1:?}"))?;
        pig = (pig.0 + n1, pig.1 + o1);
        prot = (prot.0 + n2, prot.1 + o2);
    }
    let per = |(n, o): (usize, OpCount)| (Q::new(o.mults as i128, n as i128), Q::new(o.adds as i128, n as i128));
    ensure(per(pig) == (Q::from_integer(4), Q::from_integer(3)), || format!("piggybacked {:?}", per(pig)))?;
    ensure(per(prot) == (Q::from_integer(4), Q::from_integer(5)), || format!("protected {:?}", per(prot)))
}

fn cli_end_to_end() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let input = dir.path().join("payload.bin");
    let cluster = dir.path().join("cluster");
    let output = dir.path().join("out.bin");
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x1d1b);
    let data: Vec<u8> = (0..1 << 20).map(|_| rng.gen()).collect();
    fs::write(&input, &data).map_err(|e| e.to_string())?;
    let c = cluster.to_str().unwrap();
    let steps: [Vec<&str>; 3] = [
        vec!["encode", input.to_str().unwrap(), "--cluster", c, "--n", "8", "--k", "4", "--s", "3", "--p", "2"],
        vec!["repair", "--cluster", c, "--node", "1"],
        vec!["decode", output.to_str().unwrap(), "--cluster", c],
    ];
    for (i, args) in steps.iter().enumerate() {
        if i == 1 {
            fs::remove_dir_all(cluster.join("node-001")).map_err(|e| e.to_string())?;
        }
        let o = Command::new(env!("CARGO_BIN_EXE_pbec")).args(args).output().map_err(|e| e.to_string())?;
        ensure(o.status.success(), || format!("{}: {}", args[0], String::from_utf8_lossy(&o.stderr)))?;
    }
    let o = Command::new(env!("CARGO_BIN_EXE_pbec"))
        .args(["verify", "--cluster", c])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || "verify failed after repair".into())?;
    ensure(fs::read(&output).map_err(|e| e.to_string())? == data, || "payload differs".into())?;
    within(start.elapsed(), 10.0)
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("reference table ratios", table_one),
        ("measured bandwidth equals closed forms", measurement_equals_formula),
        ("repair restores identical content", repair_correctness),
        ("any 4 of 8 nodes decode", mds_exhaustive),
        ("worked (8,4,3,2) construction", example_one),
        ("bounds and minimizers", bounds_and_minimizers),
        ("asymptotics and MSR ordering", asymptotics),
        ("repair operation counts", table_two),
        ("command-line round trip", cli_end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        match check() {
            Ok(()) => println!("PASS  {name} ({:.2?})", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
