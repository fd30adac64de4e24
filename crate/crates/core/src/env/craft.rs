use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{EnvError, Environment, NoveltySpec, Observation, Override, StepOutcome};

pub const GRID: i64 = 10;
pub const TREES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CraftParams {
    pub break_log: f64,
    pub break_platinum: f64,
    pub break_diamond: f64,
    pub collect_saplings: f64,
    pub action_cost: f64,
    pub goal_reward: f64,
    /// Multiplies every reward and cost.
    pub reward_scale: f64,
    pub recipe_logs: f64,
    pub recipe_saplings: f64,
    pub max_steps: u32,
}

impl Default for CraftParams {
    fn default() -> Self {
        CraftParams {
            break_log: 2.0,
            break_platinum: 1.0,
            break_diamond: 9.0,
            collect_saplings: 1.0,
            action_cost: 4000.0,
            goal_reward: 128_000.0,
            reward_scale: 1.0,
            recipe_logs: 6.0,
            recipe_saplings: 1.0,
            max_steps: 100,
        }
    }
}

impl CraftParams {
    pub fn get_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "break_log" => &mut self.break_log,
            "break_platinum" => &mut self.break_platinum,
            "break_diamond" => &mut self.break_diamond,
            "collect_saplings" => &mut self.collect_saplings,
            "action_cost" => &mut self.action_cost,
            "goal_reward" => &mut self.goal_reward,
            "reward_scale" => &mut self.reward_scale,
            _ => return None,
        })
    }
}

/// Object placement.
#[derive(Debug, Clone, PartialEq)]
pub struct CraftMap {
    pub agent: (i64, i64),
    pub trees: Vec<(i64, i64)>,
    pub platinum: (i64, i64),
    pub diamond: (i64, i64),
    pub sapling: (i64, i64),
    pub table: (i64, i64),
}

impl CraftMap {
    /// Distinct random cells for the agent and every object.
    pub fn random(seed: u64) -> CraftMap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cells: Vec<(i64, i64)> = (0..GRID).flat_map(|x| (0..GRID).map(move |y| (x, y))).collect();
        cells.shuffle(&mut rng);
        let mut it = cells.into_iter();
        let mut next = || it.next().expect("grid has enough cells");
        CraftMap {
            agent: next(),
            trees: (0..TREES).map(|_| next()).collect(),
            platinum: next(),
            diamond: next(),
            sapling: next(),
            table: next(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CraftEnv {
    nominal: CraftParams,
    params: CraftParams,
    map: CraftMap,
    /// Draw a fresh map from the seed on every reset.
    shuffle_maps: bool,
    agent: (i64, i64),
    trees: Vec<bool>,
    platinum_ore: bool,
    diamond_ore: bool,
    sapling_bush: bool,
    logs: f64,
    platinum: f64,
    diamonds: f64,
    saplings: f64,
    pogosticks: f64,
    explored: bool,
    steps: u32,
    done: bool,
    extra_entities: Vec<String>,
}

impl CraftEnv {
    pub fn new(params: CraftParams, map: CraftMap) -> Self {
        let mut env = CraftEnv {
            nominal: params,
            params,
            agent: map.agent,
            trees: vec![true; map.trees.len()],
            map,
            shuffle_maps: false,
            platinum_ore: true,
            diamond_ore: true,
            sapling_bush: true,
            logs: 0.0,
            platinum: 0.0,
            diamonds: 0.0,
            saplings: 0.0,
            pogosticks: 0.0,
            explored: false,
            steps: 0,
            done: false,
            extra_entities: Vec::new(),
        };
        env.reset_state();
        env
    }

    /// An environment whose layout is redrawn from the seed at each reset.
    pub fn shuffled(params: CraftParams) -> Self {
        let mut env = CraftEnv::new(params, CraftMap::random(0));
        env.shuffle_maps = true;
        env
    }

    pub fn params(&self) -> &CraftParams {
        &self.params
    }

    pub fn map(&self) -> &CraftMap {
        &self.map
    }

    fn reset_state(&mut self) {
        self.agent = self.map.agent;
        self.trees = vec![true; self.map.trees.len()];
        self.platinum_ore = true;
        self.diamond_ore = true;
        self.sapling_bush = true;
        self.logs = 0.0;
        self.platinum = 0.0;
        self.diamonds = 0.0;
        self.saplings = 0.0;
        self.pogosticks = 0.0;
        self.explored = false;
        self.steps = 0;
        self.done = false;
    }

    fn observe(&self) -> Observation {
        let mut o = Observation {
            time: self.steps as f64,
            ..Default::default()
        };
        o.set_num("agent_x", self.agent.0 as f64);
        o.set_num("agent_y", self.agent.1 as f64);
        let mut place = |name: &str, pos: (i64, i64), present: bool| {
            o.set_num(&format!("pos_x({name})"), pos.0 as f64);
            o.set_num(&format!("pos_y({name})"), pos.1 as f64);
            o.set_bool(&format!("present({name})"), present);
        };
        for (i, &pos) in self.map.trees.iter().enumerate() {
            place(&format!("t{i}"), pos, self.trees[i]);
        }
        place("ore0", self.map.platinum, self.platinum_ore);
        place("gem0", self.map.diamond, self.diamond_ore);
        place("bush0", self.map.sapling, self.sapling_bush);
        place("table0", self.map.table, true);
        o.set_num("logs", self.logs);
        o.set_num("platinum", self.platinum);
        o.set_num("diamonds", self.diamonds);
        o.set_num("saplings", self.saplings);
        o.set_num("pogosticks", self.pogosticks);
        o.set_bool("explored", self.explored);
        o.entities = ["tree", "platinum_ore", "diamond_ore", "sapling_bush", "crafting_table"]
            .iter()
            .map(|l| (l.to_string(), 1.0))
            .collect();
        for e in &self.extra_entities {
            o.entities.push((e.clone(), 1.0));
            o.set_bool(&format!("present({e})"), true);
        }
        o
    }

    /// Executes one action; returns whether it was applicable.
    fn apply(&mut self, action: &str) -> Result<bool, EnvError> {
        let mut parts = action.split_whitespace();
        let verb = parts.next().unwrap_or("");
        let arg = parts.next();
        if parts.next().is_some() {
            return Err(EnvError::UnknownAction(action.to_string()));
        }
        let p = self.params;
        let at = |pos: (i64, i64), agent: (i64, i64)| pos == agent;
        let unknown = || EnvError::UnknownAction(action.to_string());
        Ok(match (verb, arg) {
            ("move_north", None) => step_if(&mut self.agent.1, 1),
            ("move_south", None) => step_if(&mut self.agent.1, -1),
            ("move_east", None) => step_if(&mut self.agent.0, 1),
            ("move_west", None) => step_if(&mut self.agent.0, -1),
            ("break_tree", Some(t)) => {
                let i: usize = t
                    .strip_prefix('t')
                    .and_then(|n| n.parse().ok())
                    .filter(|&i: &usize| i < self.trees.len())
                    .ok_or_else(unknown)?;
                if self.trees[i] && at(self.map.trees[i], self.agent) {
                    self.trees[i] = false;
                    self.logs += p.break_log;
                    true
                } else {
                    false
                }
            }
            ("break_platinum", Some("ore0")) => {
                let ok = self.platinum_ore && at(self.map.platinum, self.agent);
                if ok {
                    self.platinum_ore = false;
                    self.platinum += p.break_platinum;
                }
                ok
            }
            ("break_diamond", Some("gem0")) => {
                let ok = self.diamond_ore && at(self.map.diamond, self.agent);
                if ok {
                    self.diamond_ore = false;
                    self.diamonds += p.break_diamond;
                }
                ok
            }
            ("collect_sapling", Some("bush0")) => {
                let ok = self.sapling_bush && at(self.map.sapling, self.agent);
                if ok {
                    self.sapling_bush = false;
                    self.saplings += p.collect_saplings;
                }
                ok
            }
            ("craft_pogostick", Some("table0")) => {
                let ok = at(self.map.table, self.agent) && self.logs >= p.recipe_logs && self.saplings >= p.recipe_saplings;
                if ok {
                    self.logs -= p.recipe_logs;
                    self.saplings -= p.recipe_saplings;
                    self.pogosticks += 1.0;
                }
                ok
            }
            ("scan", None) => {
                let ok = !self.explored;
                self.explored = true;
                ok
            }
            // No traders exist on this map.
            ("trade", _) => false,
            _ => return Err(unknown()),
        })
    }
}

fn step_if(coord: &mut i64, d: i64) -> bool {
    let n = *coord + d;
    if (0..GRID).contains(&n) {
        *coord = n;
        true
    } else {
        false
    }
}

impl Environment for CraftEnv {
    fn name(&self) -> &str {
        "craft"
    }

    /// The map is fixed at construction; `seed` is unused because episodes
    /// are deterministic.
    fn reset(&mut self, seed: u64) -> Observation {
        if self.shuffle_maps {
            self.map = CraftMap::random(seed);
        }
        self.reset_state();
        self.observe()
    }

    fn step(&mut self, action: Option<&str>) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::Terminal);
        }
        let before = self.pogosticks;
        let applied = match action {
            Some(a) => self.apply(a)?,
            None => true,
        };
        self.steps += 1;
        let p = self.params;
        let mut reward = -p.action_cost * p.reward_scale;
        if self.pogosticks > before {
            reward += p.goal_reward * p.reward_scale;
            self.done = true;
        }
        if self.steps >= p.max_steps {
            self.done = true;
        }
        Ok(StepOutcome {
            observation: self.observe(),
            reward,
            terminal: self.done,
            applied,
        })
    }

    fn action_vocabulary(&self) -> Vec<String> {
        let mut v: Vec<String> = ["move_north", "move_south", "move_east", "move_west"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        v.extend((0..self.trees.len()).map(|i| format!("break_tree t{i}")));
        v.extend(
            [
                "break_platinum ore0",
                "break_diamond gem0",
                "collect_sapling bush0",
                "craft_pogostick table0",
                "scan",
                "trade",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        v
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
        1.0
    }
}
