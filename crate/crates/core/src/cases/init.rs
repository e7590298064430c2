//! Test-case definitions and initial states.
//!
//! Case constants live in the `*.case` files next to the crate sources
//! (flat key-value text); the built-in copies are compiled in and can be
//! overridden by loading a file.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::mesh::{PolyMesh, Vec3};
use crate::operators::OperatorSet;
use crate::swe::{ModelState, Planet};

use super::quadrature::{lat_lon, project_v2, sample_v0};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseId {
    Tc2,
    Tc5,
    Galewsky,
    Linear,
}

impl CaseId {
    pub fn code(self) -> &'static str {
        match self {
            CaseId::Tc2 => "tc2",
            CaseId::Tc5 => "tc5",
            CaseId::Galewsky => "galewsky",
            CaseId::Linear => "linear",
        }
    }

    fn builtin_text(self) -> &'static str {
        match self {
            CaseId::Tc2 => include_str!("../../cases/tc2.case"),
            CaseId::Tc5 => include_str!("../../cases/tc5.case"),
            CaseId::Galewsky => include_str!("../../cases/galewsky.case"),
            CaseId::Linear => include_str!("../../cases/linear.case"),
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tc2" => Ok(CaseId::Tc2),
            "tc5" => Ok(CaseId::Tc5),
            "galewsky" => Ok(CaseId::Galewsky),
            "linear" => Ok(CaseId::Linear),
            other => Err(Error::UnknownCase(other.to_string())),
        }
    }
}

type ScalarFn = Box<dyn Fn(Vec3) -> f64 + Send + Sync>;

/// Analytic fields of a case on the unit sphere, in physical units.
pub struct AnalyticFields {
    /// Fluid-layer geopotential `g h` (perturbation geopotential for the
    /// linear case).
    pub phi: ScalarFn,
    /// Stream function with `u = k x grad psi`.
    pub psi: ScalarFn,
    /// Surface geopotential, if not flat.
    pub orog: Option<ScalarFn>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseSpec {
    pub id: CaseId,
    pub planet: Planet,
    pub params: KeyValues,
}

impl CaseSpec {
    pub fn builtin(id: CaseId) -> Self {
        Self::parse(id.builtin_text()).expect("built-in case file is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let params = KeyValues::parse(text)?;
        let version: u32 = params.require("version")?;
        if version != 1 {
            return Err(Error::Config(format!("unsupported case file version {version}")));
        }
        let id: CaseId = params.require::<String>("case")?.parse()?;
        let planet = Planet {
            radius: params.require("planet.radius")?,
            omega: params.require("planet.omega")?,
            gravity: params.require("planet.gravity")?,
        };
        Ok(CaseSpec { id, planet, params })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn p(&self, key: &str) -> Result<f64> {
        self.params.require(key)
    }

    pub fn fields(&self) -> Result<AnalyticFields> {
        let Planet { radius: a, omega, gravity: g } = self.planet;
        match self.id {
            CaseId::Tc2 => {
                let gh0 = self.p("gh0")?;
                let u0 = 2.0 * PI * a / (self.p("u0.period_days")? * 86400.0);
                Ok(solid_body(a, omega, u0, gh0, None))
            }
            CaseId::Tc5 => {
                let gh0 = g * self.p("h0")?;
                let u0 = self.p("u0")?;
                let (hs0, r0) = (self.p("mountain.height")?, self.p("mountain.radius")?);
                let (lon_c, lat_c) = (self.p("mountain.lon")?, self.p("mountain.lat")?);
                let orog = move |x: Vec3| {
                    let (lat, lon) = lat_lon(x);
                    let mut dl = (lon - lon_c).rem_euclid(2.0 * PI);
                    if dl > PI {
                        dl -= 2.0 * PI;
                    }
                    let r = (dl * dl + (lat - lat_c).powi(2)).sqrt().min(r0);
                    g * hs0 * (1.0 - r / r0)
                };
                Ok(solid_body(a, omega, u0, gh0, Some(Box::new(orog))))
            }
            CaseId::Galewsky => {
                let jet = ZonalJet::new(
                    self.planet,
                    self.p("jet.umax")?,
                    self.p("jet.lat0")?,
                    self.p("jet.lat1")?,
                    self.p("h.mean")?,
                );
                let bump = if self.p("bump.enabled")? != 0.0 {
                    Some((
                        g * self.p("bump.height")?,
                        self.p("bump.alpha")?,
                        self.p("bump.beta")?,
                        self.p("bump.lat")?,
                    ))
                } else {
                    None
                };
                let jet = Arc::new(jet);
                let j2 = jet.clone();
                Ok(AnalyticFields {
                    phi: Box::new(move |x| {
                        let (lat, lon) = lat_lon(x);
                        let mut v = j2.geopotential(lat);
                        if let Some((amp, al, be, lat2)) = bump {
                            v += amp * lat.cos() * (-(lon / al).powi(2)).exp() * (-((lat2 - lat) / be).powi(2)).exp();
                        }
                        v
                    }),
                    psi: Box::new(move |x| jet.stream_function(lat_lon(x).0)),
                    orog: None,
                })
            }
            CaseId::Linear => {
                let f = self.p("f")?;
                let u0 = self.p("u0")?;
                // phi = f psi with psi = -a u0 sin(lat)
                Ok(AnalyticFields {
                    phi: Box::new(move |x| -f * a * u0 * x.z),
                    psi: Box::new(move |x| -a * u0 * x.z),
                    orog: None,
                })
            }
        }
    }

    /// `phi0` and `f` of the linear case.
    pub fn linear_parameters(&self) -> Result<(f64, f64)> {
        Ok((self.p("phi0")?, self.p("f")?))
    }
}

/// Solid-body rotation in gradient-wind balance:
/// `phi_total = gh0 - (a Omega u0 + u0^2 / 2) sin^2(lat)`; the fluid layer
/// is the free surface minus the orography.
fn solid_body(a: f64, omega: f64, u0: f64, gh0: f64, orog: Option<ScalarFn>) -> AnalyticFields {
    let c = a * omega * u0 + 0.5 * u0 * u0;
    let surface = move |x: Vec3| gh0 - c * x.z * x.z;
    let (phi, orog): (ScalarFn, Option<ScalarFn>) = match orog {
        None => (Box::new(surface), None),
        Some(o) => {
            let o: Arc<dyn Fn(Vec3) -> f64 + Send + Sync> = Arc::from(o);
            let o2 = o.clone();
            (Box::new(move |x| surface(x) - o(x)), Some(Box::new(move |x| o2(x))))
        }
    };
    AnalyticFields {
        phi,
        psi: Box::new(move |x| -a * u0 * x.z),
        orog,
    }
}

/// Zonal jet `u(lat) = umax / e_n exp(1 / ((lat - lat0)(lat - lat1)))`
/// with geopotential from gradient-wind balance, tabulated in latitude.
pub struct ZonalJet {
    umax: f64,
    lat0: f64,
    lat1: f64,
    radius: f64,
    lats: Vec<f64>,
    geo: Vec<f64>,
    psi: Vec<f64>,
}

impl ZonalJet {
    const SAMPLES: usize = 20000;

    pub fn new(planet: Planet, umax: f64, lat0: f64, lat1: f64, mean_depth: f64) -> Self {
        let mut jet = ZonalJet {
            umax,
            lat0,
            lat1,
            radius: planet.radius,
            lats: Vec::new(),
            geo: Vec::new(),
            psi: Vec::new(),
        };
        let n = Self::SAMPLES;
        let h = PI / n as f64;
        let a = planet.radius;
        let lats: Vec<f64> = (0..=n).map(|k| -PI / 2.0 + k as f64 * h).collect();
        let geo_rate = |lat: f64| {
            let u = jet.wind(lat);
            -a * u * (2.0 * planet.omega * lat.sin() + lat.tan() * u / a)
        };
        let psi_rate = |lat: f64| -a * jet.wind(lat);
        // cumulative Simpson on each interval via its midpoint
        let (mut geo, mut psi) = (vec![0.0; n + 1], vec![0.0; n + 1]);
        for k in 0..n {
            let (l0, l1) = (lats[k], lats[k + 1]);
            let lm = 0.5 * (l0 + l1);
            geo[k + 1] = geo[k] + h / 6.0 * (geo_rate(l0) + 4.0 * geo_rate(lm) + geo_rate(l1));
            psi[k + 1] = psi[k] + h / 6.0 * (psi_rate(l0) + 4.0 * psi_rate(lm) + psi_rate(l1));
        }
        // shift so that the area mean of phi is g * mean_depth
        let mean = (0..n)
            .map(|k| 0.5 * (geo[k] * lats[k].cos() + geo[k + 1] * lats[k + 1].cos()) * h)
            .sum::<f64>()
            / 2.0;
        let shift = planet.gravity * mean_depth - mean;
        geo.iter_mut().for_each(|g| *g += shift);
        jet.lats = lats;
        jet.geo = geo;
        jet.psi = psi;
        jet
    }

    pub fn wind(&self, lat: f64) -> f64 {
        if lat <= self.lat0 || lat >= self.lat1 {
            return 0.0;
        }
        let en = (-4.0 / (self.lat1 - self.lat0).powi(2)).exp();
        self.umax / en * (1.0 / ((lat - self.lat0) * (lat - self.lat1))).exp()
    }

    fn interp(&self, table: &[f64], lat: f64) -> f64 {
        let n = Self::SAMPLES;
        let s = ((lat + PI / 2.0) / PI * n as f64).clamp(0.0, n as f64);
        let k = (s.floor() as usize).min(n - 1);
        let t = s - k as f64;
        table[k] * (1.0 - t) + table[k + 1] * t
    }

    pub fn geopotential(&self, lat: f64) -> f64 {
        self.interp(&self.geo, lat)
    }

    pub fn stream_function(&self, lat: f64) -> f64 {
        self.interp(&self.psi, lat)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Initial state: cell integrals of the geopotential and orography (by
/// quadrature on the supermesh) and `U = -D1 Psi` from the stream
/// function sampled at primal vertices.
pub fn init_case(spec: &CaseSpec, mesh: &PolyMesh, ops: &OperatorSet) -> Result<ModelState> {
    let a = spec.planet.radius;
    if (ops.radius - a).abs() > 1e-9 * a {
        return Err(Error::Config(format!(
            "operators built for radius {} but the case uses {a}",
            ops.radius
        )));
    }
    let fields = spec.fields()?;
    let a2 = a * a;
    let phi: Vec<f64> = project_v2(mesh, &fields.phi).into_iter().map(|x| x * a2).collect();
    let psi = sample_v0(mesh, &fields.psi);
    let u: Vec<f64> = ops.d1.apply(&psi).into_iter().map(|x| -x).collect();
    let mut state = ModelState::new(phi, u);
    if let Some(orog) = &fields.orog {
        state.phi_orog = project_v2(mesh, orog).into_iter().map(|x| x * a2).collect();
    }
    if spec.id != CaseId::Linear {
        if let Some(i) = state.phi.iter().position(|p| !(*p > 0.0)) {
            return Err(Error::StateValidity(format!("non-positive initial geopotential in cell {i}")));
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_hex_icos;

    #[test]
    fn builtin_cases_parse() {
        for id in [CaseId::Tc2, CaseId::Tc5, CaseId::Galewsky, CaseId::Linear] {
            let spec = CaseSpec::builtin(id);
            assert_eq!(spec.id, id);
            let f = spec.fields().unwrap();
            for x in [Vec3::x(), Vec3::z(), Vec3::new(0.3, -0.4, 0.866).normalize()] {
                assert!((f.phi)(x).is_finite() && (f.psi)(x).is_finite());
            }
        }
        assert!(matches!("tc9".parse::<CaseId>(), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn tc2_has_no_divergence_and_tc5_mountain_is_bounded() {
        let mesh = gen_hex_icos(3).unwrap();
        let spec = CaseSpec::builtin(CaseId::Tc5);
        let ops = OperatorSet::build(&mesh).unwrap().scaled(spec.planet.radius);
        let s = init_case(&spec, &mesh, &ops).unwrap();
        let div = ops.d2.apply(&s.u);
        let umax = s.u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(div.iter().all(|d| d.abs() < 1e-9 * umax));
        let g = spec.planet.gravity;
        for (o, a) in s.phi_orog.iter().zip(&ops.cell_areas) {
            assert!(o / a <= 2000.0 * g + 1e-9 && *o >= 0.0);
        }
        assert!(s.phi_orog.iter().any(|o| *o > 0.0));
    }

    #[test]
    fn galewsky_jet_is_balanced_and_has_the_requested_mean_depth() {
        let spec = CaseSpec::builtin(CaseId::Galewsky);
        let p = spec.planet;
        let jet = ZonalJet::new(p, 80.0, PI / 7.0, PI / 2.0 - PI / 7.0, 1e4);
        let mid = 0.25 * PI;
        assert!((jet.wind(mid) - 80.0).abs() < 1.0);
        assert_eq!(jet.wind(0.1), 0.0);
        // d(phi)/d(lat) = -a u (f + tan(lat) u / a)
        let h = 1e-4;
        let dphi = (jet.geopotential(mid + h) - jet.geopotential(mid - h)) / (2.0 * h);
        let u = jet.wind(mid);
        let expect = -p.radius * u * (2.0 * p.omega * mid.sin() + mid.tan() * u / p.radius);
        assert!((dphi - expect).abs() < 1e-3 * expect.abs());
        let n = 4000;
        let mean: f64 = (0..n)
            .map(|k| {
                let lat = -PI / 2.0 + (k as f64 + 0.5) * PI / n as f64;
                jet.geopotential(lat) * lat.cos() * PI / n as f64
            })
            .sum::<f64>()
            / 2.0;
        assert!((mean / p.gravity - 1e4).abs() < 1e-3);
    }
}
