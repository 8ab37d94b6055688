//! Closed-form calculators tying detector efficiency to communication cost.

use serde::Serialize;

use crate::error::{Error, Result};

/// 2 / eta^2: average bits of the rejection protocol at efficiency eta.
pub fn communication_from_eta(eta: f64) -> Result<f64> {
    if eta <= 0.0 || eta > 1.0 {
        return Err(Error::invalid(format!(
            "efficiency must lie in (0, 1], got {eta}"
        )));
    }
    Ok(2.0 / (eta * eta))
}

/// sqrt(2 / C): the efficiency ceiling implied by an average cost of C bits.
pub fn eta_from_communication(c: f64) -> Result<f64> {
    if c <= 0.0 {
        return Err(Error::invalid(format!(
            "communication cost must be positive, got {c}"
        )));
    }
    Ok((2.0 / c).sqrt())
}

/// (6 + 3 log2 d) d + 2: average bits sufficient to simulate any
/// d-dimensional scenario.
pub fn mbcc_bits(d: u64) -> Result<f64> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    Ok((6.0 + 3.0 * (d as f64).log2()) * d as f64 + 2.0)
}

/// log2 M: bits to announce one of M measurement labels.
pub fn trivial_bits(m: u64) -> Result<f64> {
    if m == 0 {
        return Err(Error::invalid("label count must be positive"));
    }
    Ok((m as f64).log2())
}

/// log2 of the efficiency below which the conversation-guessing argument
/// suggests a local model exists: -(6 + 3 log2 d) d - 2.
pub fn mu_eta_log2(d: u64) -> Result<f64> {
    Ok(-mbcc_bits(d)?)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BoundRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_from_eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_from_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mbcc_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trivial_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_eta_log2: Option<f64>,
}

/// Evaluates whichever closed forms the present inputs allow.
pub fn bound_calculators(
    d: Option<u64>,
    eta: Option<f64>,
    c: Option<f64>,
    m: Option<u64>,
) -> Result<BoundRecord> {
    let mut record = BoundRecord::default();
    if let Some(eta) = eta {
        record.c_from_eta = Some(communication_from_eta(eta)?);
    }
    if let Some(c) = c {
        record.eta_from_c = Some(eta_from_communication(c)?);
    }
    if let Some(d) = d {
        record.mbcc_bits = Some(mbcc_bits(d)?);
        record.mu_eta_log2 = Some(mu_eta_log2(d)?);
    }
    if let Some(m) = m {
        record.trivial_bits = Some(trivial_bits(m)?);
    }
    if record.c_from_eta.is_none()
        && record.eta_from_c.is_none()
        && record.mbcc_bits.is_none()
        && record.trivial_bits.is_none()
    {
        return Err(Error::invalid("no bound inputs given"));
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(communication_from_eta(0.5).unwrap(), 8.0);
        assert_eq!(eta_from_communication(2.0).unwrap(), 1.0);
        assert_eq!(mbcc_bits(4).unwrap(), 50.0);
        assert_eq!(trivial_bits(16).unwrap(), 4.0);
        assert_eq!(mu_eta_log2(4).unwrap(), -50.0);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(communication_from_eta(0.0).is_err());
        assert!(eta_from_communication(0.0).is_err());
        assert!(mbcc_bits(0).is_err());
        assert!(bound_calculators(None, None, None, None).is_err());
    }

    #[test]
    fn duality_identity_on_a_grid() {
        for i in 1..=100 {
            let eta = i as f64 / 100.0;
            let c = communication_from_eta(eta).unwrap();
            let back = eta_from_communication(c).unwrap();
            assert!((back - eta).abs() <= 1e-12, "eta {eta} round-trips to {back}");
        }
    }

    #[test]
    fn record_is_partial() {
        let r = bound_calculators(Some(4), None, None, None).unwrap();
        assert_eq!(r.mbcc_bits, Some(50.0));
        assert!(r.c_from_eta.is_none());
        let json = serde_json::to_string(&r).unwrap();
        assert!(!json.contains("c_from_eta"));
    }
}
