//! Shockley diode model.

/// Exponent argument beyond which the exponential is continued linearly.
pub const EXP_CLAMP: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiodeParams {
    /// Saturation current `I_S` in A.
    pub saturation_current: f64,
    /// Thermal voltage `U_TH` in V.
    pub thermal_voltage: f64,
}

impl DiodeParams {
    pub fn new(saturation_current: f64, thermal_voltage: f64) -> Self {
        Self {
            saturation_current,
            thermal_voltage,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.saturation_current > 0.0
            && self.thermal_voltage > 0.0
            && self.saturation_current.is_finite()
            && self.thermal_voltage.is_finite()
    }
}

/// `exp(x)` continued as its tangent line beyond `clamp`; returns the value
/// and the derivative.
pub(crate) fn exp_c1(x: f64, clamp: f64) -> (f64, f64) {
    if x <= clamp {
        let e = x.exp();
        (e, e)
    } else {
        let e = clamp.exp();
        (e * (1.0 + (x - clamp)), e)
    }
}

/// Current `I_S (exp(u / U_TH) - 1)` and conductance `dj/du`.
pub fn shockley(voltage: f64, params: &DiodeParams) -> (f64, f64) {
    let DiodeParams {
        saturation_current: is,
        thermal_voltage: uth,
    } = *params;
    let (e, de) = exp_c1(voltage / uth, EXP_CLAMP);
    (is * (e - 1.0), is / uth * de)
}

/// Voltage above which the diode current grows fast enough that Newton
/// steps need limiting, `U_TH ln(U_TH / (sqrt(2) I_S))`.
pub fn critical_voltage(params: &DiodeParams) -> f64 {
    let uth = params.thermal_voltage;
    uth * (uth / (std::f64::consts::SQRT_2 * params.saturation_current)).ln()
}

/// Junction voltage limiting for a Newton update from `v_old` to `v_new`:
/// above the critical voltage, increases are compressed logarithmically.
/// Returns the voltage to linearize at and whether it was limited.
pub fn limit_voltage(v_new: f64, v_old: f64, params: &DiodeParams) -> (f64, bool) {
    let uth = params.thermal_voltage;
    let vcrit = critical_voltage(params);
    if v_new <= vcrit || (v_new - v_old).abs() <= 2.0 * uth {
        return (v_new, false);
    }
    let limited = if v_old > 0.0 {
        let arg = 1.0 + (v_new - v_old) / uth;
        if arg > 0.0 {
            v_old + uth * arg.ln()
        } else {
            vcrit
        }
    } else {
        uth * (v_new / uth).ln()
    };
    (limited, true)
}
