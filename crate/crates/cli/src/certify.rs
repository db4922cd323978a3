//! Certificate report: every constant of the bound in one JSON object.

use gaussbound_core::constants::{self, b_double_prime, b_prime, delta_n, rho3, Certificate, Variant, RHO, RHO1, RHO2};
use gaussbound_core::render::{BigUint, LogRepr, Num17};
use gaussbound_core::Result;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub n: u32,
    pub beta: Num17,
    pub b0: Num17,
    pub variant: &'static str,
    pub gamma_n: BigUint,
    pub rho: Num17,
    pub rho1: Num17,
    pub rho2: Num17,
    pub rho3: Num17,
    pub b_prime: LogRepr,
    pub b_double_prime: LogRepr,
    pub delta_double_prime: LogRepr,
    pub ln_c: Num17,
    pub c_base: LogRepr,
    pub c: Num17,
    pub delta_n: Num17,
    pub delta0: Num17,
    pub ln_delta0: Num17,
    pub delta0_underflow: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fill_distance: Option<FillDistanceConstants>,
    pub notes: Vec<String>,
}

/// Constants of the fill-distance form, derived from the base certificate.
#[derive(Debug, Clone, Serialize)]
pub struct FillDistanceConstants {
    pub derived_from: &'static str,
    pub c_prime: LogRepr,
    pub ln_c_prime: Num17,
    pub c_exp_prime: Num17,
    pub d0: Num17,
    pub ln_d0: Num17,
    pub d0_underflow: bool,
}

fn underflow_note(name: &str, ln_value: f64) -> String {
    format!(
        "{name} = exp({ln_value:.6}) is below the smallest positive double and is reported as 0; no representable spacing is certified"
    )
}

/// Report for `variant`; the fill-distance form is derived from `base`.
pub fn report(n: u32, beta: f64, b0: f64, variant: Variant, base: Variant) -> Result<CertificateReport> {
    let source_variant = if variant == Variant::FillDistance { base } else { variant };
    let cert: Certificate = constants::certificate(n, beta, b0, source_variant)?;
    let mut notes = Vec::new();
    if cert.delta0_underflowed() {
        notes.push(underflow_note("delta0", cert.ln_delta0));
    }
    let fill_distance = if variant == Variant::FillDistance {
        let fd = constants::corollary_certificate(&cert)?;
        if fd.delta0_underflowed() && !cert.delta0_underflowed() {
            notes.push(underflow_note("d0", fd.ln_delta0));
        }
        Some(FillDistanceConstants {
            derived_from: source_variant.as_str(),
            c_prime: fd.c_base.into(),
            ln_c_prime: Num17(fd.ln_c_base()),
            c_exp_prime: Num17(fd.c_exp),
            d0: Num17(fd.delta0),
            ln_d0: Num17(fd.ln_delta0),
            d0_underflow: fd.delta0_underflowed(),
        })
    } else {
        None
    };
    Ok(CertificateReport {
        n,
        beta: Num17(beta),
        b0: Num17(b0),
        variant: variant.as_str(),
        gamma_n: BigUint(cert.gamma_n),
        rho: Num17(RHO),
        rho1: Num17(RHO1),
        rho2: Num17(RHO2),
        rho3: Num17(rho3(beta)),
        b_prime: b_prime(n, beta)?.into(),
        b_double_prime: b_double_prime(n, beta, source_variant)?.into(),
        delta_double_prime: cert.delta_pp.into(),
        ln_c: Num17(cert.ln_c_base()),
        c_base: cert.c_base.into(),
        c: Num17(cert.c_exp),
        delta_n: Num17(delta_n(n, b0)?),
        delta0: Num17(cert.delta0),
        ln_delta0: Num17(cert.ln_delta0),
        delta0_underflow: cert.delta0_underflowed(),
        fill_distance,
        notes,
    })
}
