use anisofrac::appio::build_regions;
use anisofrac::appio::config::SimJob;
use anisofrac::fem::mesh::generate_mesh;
use anisofrac::fem::{run_load_program, FieldState, StepContext};
use anisofrac::orientation::FiberSpec;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let alpha_hat: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let passes: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let mut job = SimJob::default();
    job.geometry.nx = 28;
    job.geometry.ny = 28;
    job.fiber_specs = vec![FiberSpec::Aligned { angle_deg: 30.0 }];
    job.v_f_total = 0.5;
    job.fracture.alpha_hat = alpha_hat;
    job.load.du = 5e-5;
    job.load.target = 0.030;
    job.solver.staggered_passes = passes;

    let mesh = generate_mesh(&job.geometry).unwrap();
    let regions = build_regions(&job).unwrap();
    let ctx = StepContext {
        mesh: &mesh,
        families: &regions.families,
        aniso: &regions.aniso,
        params: &job.material,
        env: &job.env,
        fracture: &job.fracture,
        dt: 0.0,
        fp_tol: job.solver.fp_tol,
        fp_max_iters: job.solver.fp_max_iters,
    };
    let mut fields = FieldState::new(&mesh);
    let result = run_load_program(&ctx, &mut fields, &job.load, &job.solver, |row, _| {
        if row.step % 50 == 0 || row.staggered_iters > 3 {
            eprintln!(
                "step {:5} u={:.5} F={:8.3} newton={} stag={}",
                row.step, row.displacement_mm, row.force_n, row.newton_iters, row.staggered_iters
            );
        }
    });
    match result {
        Ok(report) => {
            let peak = report.peak_force().unwrap();
            println!(
                "alpha_hat={alpha_hat}: OK peak {:.3} N at {:.5} mm ({} steps)",
                peak.force_n,
                peak.displacement_mm,
                report.rows.len()
            );
        }
        Err(e) => println!("alpha_hat={alpha_hat}: FAILED: {e}"),
    }
}
