use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvError, Environment, NoveltySpec, Observation, Override, StepOutcome};

pub const MAX_STEPS: u32 = 200;
pub const DELTA_T: f64 = 0.02;

/// Ground-truth physical parameters; names match the planning model's fluents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleParams {
    pub length_pole: f64,
    pub mass_pole: f64,
    pub mass_cart: f64,
    pub force_mag: f64,
    pub gravity: f64,
    pub pole_angle_limit: f64,
    pub push_force_left: f64,
    pub push_force_right: f64,
    pub push_force_fwd: f64,
    pub push_force_back: f64,
    pub pole_vel_scale_x: f64,
    pub pole_vel_scale_y: f64,
    pub cart_vel_scale_x: f64,
    pub cart_vel_scale_y: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        CartPoleParams {
            length_pole: 0.5,
            mass_pole: 0.1,
            mass_cart: 1.0,
            force_mag: 10.0,
            gravity: 9.81,
            pole_angle_limit: 0.165,
            push_force_left: 10.0,
            push_force_right: 10.0,
            push_force_fwd: 10.0,
            push_force_back: 10.0,
            pole_vel_scale_x: 1.0,
            pole_vel_scale_y: 1.0,
            cart_vel_scale_x: 1.0,
            cart_vel_scale_y: 1.0,
        }
    }
}

impl CartPoleParams {
    pub fn get_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "length_pole" => &mut self.length_pole,
            "mass_pole" => &mut self.mass_pole,
            "mass_cart" => &mut self.mass_cart,
            "force_mag" => &mut self.force_mag,
            "gravity" => &mut self.gravity,
            "pole_angle_limit" => &mut self.pole_angle_limit,
            "push_force_left" => &mut self.push_force_left,
            "push_force_right" => &mut self.push_force_right,
            "push_force_fwd" => &mut self.push_force_fwd,
            "push_force_back" => &mut self.push_force_back,
            "pole_vel_scale_x" => &mut self.pole_vel_scale_x,
            "pole_vel_scale_y" => &mut self.pole_vel_scale_y,
            "cart_vel_scale_x" => &mut self.cart_vel_scale_x,
            "cart_vel_scale_y" => &mut self.cart_vel_scale_y,
            _ => return None,
        })
    }
}

/// One planar cart-pole: cart position/velocity and pole angle/rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Plane {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl Plane {
    /// Classic frictionless cart-pole accelerations `(x_acc, theta_acc)`.
    /// The operation order is fixed so that results are reproducible bit for
    /// bit by the planning model's expressions.
    pub fn accelerations(&self, force: f64, p: &CartPoleParams) -> (f64, f64) {
        let (mp, mc, l, g) = (p.mass_pole, p.mass_cart, p.length_pole, p.gravity);
        let (sin, cos) = (self.theta.sin(), self.theta.cos());
        let td = self.theta_dot;
        let temp = (force + ((mp * l) * (td * td)) * sin) / (mc + mp);
        let thacc = (g * sin - cos * temp) / (l * (4.0 / 3.0 - (mp * (cos * cos)) / (mc + mp)));
        let xacc = temp - ((mp * l) * thacc * cos) / (mc + mp);
        (xacc, thacc)
    }

    fn euler(&self, force: f64, cart_scale: f64, pole_scale: f64, p: &CartPoleParams, dt: f64) -> Plane {
        let (xacc, thacc) = self.accelerations(force, p);
        Plane {
            x: self.x + dt * (0.0 + cart_scale * self.x_dot),
            theta: self.theta + dt * (0.0 + pole_scale * self.theta_dot),
            x_dot: self.x_dot + dt * (0.0 + xacc),
            theta_dot: self.theta_dot + dt * (0.0 + thacc),
        }
    }
}

/// Two decoupled planar cart-poles sharing one cart mass.
#[derive(Debug, Clone)]
pub struct CartPoleEnv {
    nominal: CartPoleParams,
    params: CartPoleParams,
    /// Half-width of the uniform reset noise on every state variable.
    pub init_noise: f64,
    px: Plane,
    py: Plane,
    elapsed_time: f64,
    steps: u32,
    failed: bool,
    extra_entities: Vec<String>,
}

impl Default for CartPoleEnv {
    fn default() -> Self {
        CartPoleEnv::new(CartPoleParams::default(), 0.01)
    }
}

impl CartPoleEnv {
    pub fn new(params: CartPoleParams, init_noise: f64) -> Self {
        CartPoleEnv {
            nominal: params,
            params,
            init_noise,
            px: Plane::default(),
            py: Plane::default(),
            elapsed_time: 0.0,
            steps: 0,
            failed: false,
            extra_entities: Vec::new(),
        }
    }

    pub fn params(&self) -> &CartPoleParams {
        &self.params
    }

    pub fn planes(&self) -> (Plane, Plane) {
        (self.px, self.py)
    }

    /// Places the system in an exact state (tests and tooling).
    pub fn set_planes(&mut self, px: Plane, py: Plane) {
        self.px = px;
        self.py = py;
    }

    pub fn is_terminal(&self) -> bool {
        self.failed || self.steps >= MAX_STEPS
    }

    fn observe(&self) -> Observation {
        let mut o = Observation {
            time: self.elapsed_time,
            ..Default::default()
        };
        for (tag, p) in [("x", &self.px), ("y", &self.py)] {
            o.set_num(&format!("cart_{tag}"), p.x);
            o.set_num(&format!("cart_{tag}_dot"), p.x_dot);
            o.set_num(&format!("theta_{tag}"), p.theta);
            o.set_num(&format!("theta_{tag}_dot"), p.theta_dot);
        }
        o.set_num("elapsed_time", self.elapsed_time);
        o.set_num("elapsed_steps", self.steps as f64);
        o.set_bool("total_failure", self.failed);
        o.entities = vec![("cart".into(), 1.0), ("pole".into(), 1.0)];
        for e in &self.extra_entities {
            o.entities.push((e.clone(), 1.0));
        }
        o
    }

    fn fell(&self, theta: f64) -> bool {
        let lim = self.params.pole_angle_limit;
        theta >= lim || theta <= -lim
    }
}

impl Environment for CartPoleEnv {
    fn name(&self) -> &str {
        "cartpole"
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.init_noise;
        let mut draw = || if n > 0.0 { rng.gen_range(-n..=n) } else { 0.0 };
        self.px = Plane {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        };
        self.py = Plane {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        };
        self.elapsed_time = 0.0;
        self.steps = 0;
        self.failed = false;
        self.observe()
    }

    fn step(&mut self, action: Option<&str>) -> Result<StepOutcome, EnvError> {
        if self.is_terminal() {
            return Err(EnvError::Terminal);
        }
        let p = self.params;
        let (mut fx, mut fy) = (0.0, 0.0);
        match action {
            None => {}
            Some("push_left") => fx = -((p.force_mag + p.push_force_left) / 2.0),
            Some("push_right") => fx = (p.force_mag + p.push_force_right) / 2.0,
            Some("push_fwd") => fy = (p.force_mag + p.push_force_fwd) / 2.0,
            Some("push_back") => fy = -((p.force_mag + p.push_force_back) / 2.0),
            Some(other) => return Err(EnvError::UnknownAction(other.to_string())),
        }
        self.px = self.px.euler(fx, p.cart_vel_scale_x, p.pole_vel_scale_x, &p, DELTA_T);
        self.py = self.py.euler(fy, p.cart_vel_scale_y, p.pole_vel_scale_y, &p, DELTA_T);
        self.elapsed_time += DELTA_T * (0.0 + 1.0);
        self.steps += 1;
        self.failed = self.fell(self.px.theta) || self.fell(self.py.theta);
        Ok(StepOutcome {
            observation: self.observe(),
            reward: if self.failed { 0.0 } else { 1.0 },
            terminal: self.is_terminal(),
            applied: true,
        })
    }

    fn action_vocabulary(&self) -> Vec<String> {
        ["push_left", "push_right", "push_fwd", "push_back"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn configure_episode(&mut self, spec: Option<&NoveltySpec>, episode: usize) -> Result<(), EnvError> {
        self.params = self.nominal;
        self.extra_entities.clear();
        let Some(spec) = spec.filter(|s| s.active(episode)) else {
            return Ok(());
        };
        for o in &spec.overrides {
            match o {
                Override::Set { param, value } => {
                    *self
                        .params
                        .get_mut(param)
                        .ok_or_else(|| EnvError::UnknownParameter(param.clone()))? = *value
                }
                Override::Scale { param, factor } => {
                    *self
                        .params
                        .get_mut(param)
                        .ok_or_else(|| EnvError::UnknownParameter(param.clone()))? *= *factor
                }
                Override::NewEntity { label } => self.extra_entities.push(label.clone()),
            }
        }
        Ok(())
    }

    fn reward_normalizer(&self) -> f64 {
        MAX_STEPS as f64
    }
}
