//! Human-readable census report.

use crate::certificate::Certificate;

pub fn render(cert: &Certificate) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!(
        "census report (tool {}, config {:016x})",
        cert.tool_version, cert.config_hash
    ));
    line(format!(
        "kernel normalization c_G = {} (free; see sensitivity table)",
        cert.green_c_g
    ));
    line(String::new());
    for (key, k) in &cert.constants {
        line(format!("constants at beta = {key}:"));
        line(format!(
            "  kappa       = {:>18.12e} +- {:.2e}",
            k.kappa.value, k.kappa.error
        ));
        line(format!(
            "  kappa'      = {:>18.12e} +- {:.2e}",
            k.kappa_prime.value, k.kappa_prime.error
        ));
        line(format!(
            "  c           = {:>18.12e} +- {:.2e}",
            k.c.value, k.c.error
        ));
        line(format!(
            "  c2          = {:>18.12e} +- {:.2e}",
            k.c2.value, k.c2.error
        ));
        line(format!(
            "  S           = {:>18.12e} +- {:.2e}",
            k.s.value, k.s.error
        ));
        line(format!(
            "  omega3      = {:>18.12e} +- {:.2e}",
            k.omega3.value, k.omega3.error
        ));
        line(format!(
            "  c'          = {:>18.12e} +- {:.2e}",
            k.c_prime.value, k.c_prime.error
        ));
        line(format!(
            "  c0^2        = {:>18.12e} +- {:.2e}",
            k.c0_sq.value, k.c0_sq.error
        ));
    }
    line(String::new());
    line("points:".to_string());
    for p in &cert.points {
        line(format!(
            "  {:<12} beta = {:<6} set = {:<8} sigma = {:+.6e}  m = {}",
            p.id, p.beta, p.set, p.sigma, p.m
        ));
    }
    line(String::new());
    line(format!(
        "positive-definite tuple family (l+ = {}):",
        cert.l_plus
    ));
    if cert.k1plus.is_empty() {
        line("  (empty)".to_string());
    }
    for t in &cert.k1plus {
        line(format!(
            "  {{{}}}  least eigenvalue = {:.6e}",
            t.members.join(", "),
            t.rho
        ));
    }
    line(String::new());
    line(format!("ends and indices (L0 = {}):", cert.l0));
    for e in &cert.ends {
        line(format!(
            "  {:<7} {{{}}}  index = {}",
            e.kind,
            e.members.join(", "),
            e.index
        ));
    }
    line(String::new());
    line("gate table (bound column: canonical counting identity;".to_string());
    line(" as-printed column: the statement's literal filter and sign,".to_string());
    line(" kept for audit; rows are flagged * where the two differ):".to_string());
    line(format!(
        "  {:>3} {:>6} {:>6} {:>6} {:>8} {:>7} {:>11}",
        "k", "sum", "cond1", "cond2", "verdict", "bound", "as-printed"
    ));
    for g in &cert.gates {
        let flag = if g.bound != g.bound_as_printed { " *" } else { "" };
        line(format!(
            "  {:>3} {:>6} {:>6} {:>6} {:>8} {:>7} {:>11}{}",
            g.k, g.sum, g.cond1, g.cond2, g.verdict, g.bound, g.bound_as_printed, flag
        ));
    }
    line(String::new());
    line(format!(
        "full criterion at k = {}: solution exists = {}, solution count >= {}",
        cert.full_k, cert.full_exists, cert.full_bound
    ));
    line(String::new());
    line("sensitivity of the verdicts to the kernel normalization:".to_string());
    for row in &cert.sweep {
        line(format!(
            "  c_G = {:<10} family = {:<24} exists = {:<5} bound = {}{}",
            row.c_g,
            row.family,
            row.exists,
            row.bound,
            if row.changed { "   <- changed" } else { "" }
        ));
    }
    out
}
