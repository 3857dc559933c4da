//! Prints the headline figures of the calibrated scenarios; handy when
//! adjusting assumed parameters.

use qconvsim::experiments::{
    cardinal_inputs, fit_visibility, run_bbm92, run_fringe_scan, run_single_qubit_conversion,
    scan_grid, ScanVariable, Scenario,
};

fn main() {
    let grid = scan_grid(17, std::f64::consts::TAU);

    for (name, scenario) in [
        ("back-to-back", Scenario::calibrated_back_to_back()),
        ("12.4 km", Scenario::calibrated_fiber_12km()),
    ] {
        let mut fringe = scenario.clone();
        fringe.pulses = 2_000_000_000;
        let fit =
            fit_visibility(&run_fringe_scan(&fringe, ScanVariable::AlicePhase, &grid).unwrap())
                .unwrap();

        let mut fringe_b = fringe.clone();
        fringe_b.analysis_phase_bob = std::f64::consts::FRAC_PI_2;
        let fit_b =
            fit_visibility(&run_fringe_scan(&fringe_b, ScanVariable::AlicePhase, &grid).unwrap())
                .unwrap();

        let theta_fit =
            fit_visibility(&run_fringe_scan(&fringe, ScanVariable::SourceTheta, &grid).unwrap())
                .unwrap();

        let mut qkd = scenario.clone();
        qkd.pulses = 10_000_000_000;
        let report = run_bbm92(&qkd).unwrap();

        println!("== {name} ==");
        println!(
            "  V(phi_B = 0)   = {:.4} +/- {:.4}",
            fit.visibility, fit.visibility_std_error
        );
        println!(
            "  V(phi_B = pi/2)= {:.4} +/- {:.4}",
            fit_b.visibility, fit_b.visibility_std_error
        );
        println!(
            "  V(theta scan)  = {:.4} +/- {:.4}",
            theta_fit.visibility, theta_fit.visibility_std_error
        );
        println!(
            "  QBER = {:.4} (Z {:.4}, X {:.4})  RKR = {:.1} bps  sifted = {}",
            report.qber,
            report.z_basis.qber,
            report.x_basis.qber,
            report.raw_key_rate_bps,
            report.sifted_bits
        );
    }

    let mut tomo = Scenario::calibrated_back_to_back();
    tomo.pulses = 100_000;
    let outcomes = run_single_qubit_conversion(&tomo, &cardinal_inputs()).unwrap();
    let avg: f64 = outcomes
        .iter()
        .map(|o| o.tomo.fidelity_vs_target.unwrap())
        .sum::<f64>()
        / outcomes.len() as f64;
    println!("== conversion fidelities (1e5 shots/basis) ==");
    for o in &outcomes {
        println!("  {:8} {:.4}", o.label, o.tomo.fidelity_vs_target.unwrap());
    }
    println!("  average  {avg:.4}");
}
