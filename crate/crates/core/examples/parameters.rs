//! Loading a configuration: defaults, unit conversion, overrides and the
//! feedback-strength consistency check.
//!
//!     cargo run --example parameters

use qdlaser::RunConfig;

fn main() -> qdlaser::Result<()> {
    let cfg = RunConfig::parse("")?;
    let p = &cfg.params;
    println!("default device");
    println!("  beta            {}", p.beta);
    println!("  dots            {}", p.n_qd);
    println!("  delay           {} ps", p.tau_delay / 1000.0);
    println!("  S               {}", p.feedback_strength);
    println!("  kappa_ext       {:.4e} /ps (from S and the delay)", p.kappa_ext * 1000.0);
    println!("  gamma_pd        {:.4e} /fs", p.gamma_pd);
    println!("  |M|             {:.3e} /fs", p.m_coupling);
    println!("  modal gain      {:.3e} /fs vs 2 kappa {:.3e} /fs", p.modal_gain(), 2.0 * p.kappa);

    let text = "feedback_strength = 0.65\nn_qd = 1.8e6\n";
    let cfg = RunConfig::parse_with_overrides(text, &["beta = 1e-3".into(), "pump_fs = 3e-5".into()])?;
    println!(
        "\nhigh-gain file with overrides: beta {} dots {} kappa_ext {:.4e} /ps pump {:.1e} /fs",
        cfg.params.beta,
        cfg.params.n_qd,
        cfg.params.kappa_ext * 1000.0,
        cfg.params.tau_p_inv
    );

    match RunConfig::parse("feedback_strength = 0.5\nkappa_ext_inv_ps = 50.0\n") {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("\ninconsistent S and kappa_ext: {e}"),
    }
    match RunConfig::parse("beta = -0.1") {
        Ok(_) => println!("unexpectedly accepted"),
        Err(e) => println!("negative beta: {e}"),
    }

    println!("\nresolved config as written to a manifest:\n{}", RunConfig::default().to_toml());
    Ok(())
}
