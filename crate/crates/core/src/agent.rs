//! The decision core: joint move / working-memory selection over bound HRR
//! inputs, TD-error driven ATR switching, and model growth with either a
//! full reset or a least-squares transfer of the learned values.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::atr::{AblationMode, AtrBank, BankParams, Crossing, ThresholdMode};
use crate::error::{Error, Result};
use crate::hrr::Hrr;
use crate::ledger::{grow_dimension, Symbol, SymbolLedger};
use crate::maze::{EpisodeState, MazeTask};
use crate::network::{td_error_signed, BootstrapSign, EligibilityTrace, ValueNetwork};
use crate::scalar::Scalar;
use crate::solve::stack_and_solve;

/// Slot order of a composed input: state, signal, working memory, ATR, reward.
pub type InputKey = [Symbol; 5];
const ATR_SLOT: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthMethod {
    /// Discard every representation and the learned weights.
    #[default]
    Reset,
    /// Rebuild representations and solve for weights reproducing old values.
    Transfer,
}

impl fmt::Display for GrowthMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowthMethod::Reset => "reset",
            GrowthMethod::Transfer => "transfer",
        })
    }
}

impl FromStr for GrowthMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reset" => Ok(GrowthMethod::Reset),
            "transfer" => Ok(GrowthMethod::Transfer),
            other => Err(Error::Config(format!("unknown growth method `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtrCountMode {
    /// The initial ATR count never changes.
    #[default]
    Static,
    /// ATRs are added when the mean ATR value sinks below the growth floor.
    Dynamic,
}

impl FromStr for AtrCountMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(AtrCountMode::Static),
            "dynamic" => Ok(AtrCountMode::Dynamic),
            other => Err(Error::Config(format!("unknown ATR count mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub hrr_length: usize,
    pub gamma: f64,
    pub alpha_train: f64,
    pub alpha_test: f64,
    pub epsilon_train: f64,
    pub epsilon_test: f64,
    pub lambda: f64,
    pub threshold_mode: ThresholdMode,
    pub threshold: f64,
    pub threshold_alpha: f64,
    pub atr_alpha: f64,
    pub growth_floor: f64,
    pub growth_method: GrowthMethod,
    pub atr_count_mode: AtrCountMode,
    /// Initial number of ATRs.
    pub atrs: usize,
    pub ablation_mode: AblationMode,
    /// Skip the dynamic threshold update on steps where a switch fired.
    pub freeze_threshold_on_switch: bool,
    pub bootstrap_sign: BootstrapSign,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hrr_length: 1024,
            gamma: 0.9,
            alpha_train: 0.3,
            alpha_test: 0.01,
            epsilon_train: 0.01,
            epsilon_test: 0.0,
            lambda: 0.0,
            threshold_mode: ThresholdMode::Static,
            threshold: 0.3,
            threshold_alpha: -0.5,
            atr_alpha: 0.0,
            growth_floor: -0.5,
            growth_method: GrowthMethod::Reset,
            atr_count_mode: AtrCountMode::Static,
            atrs: 1,
            ablation_mode: AblationMode::Both,
            freeze_threshold_on_switch: true,
            bootstrap_sign: BootstrapSign::Plus,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("alpha_train", self.alpha_train)?;
        unit("alpha_test", self.alpha_test)?;
        unit("epsilon_train", self.epsilon_train)?;
        unit("epsilon_test", self.epsilon_test)?;
        unit("lambda", self.lambda)?;
        unit("atr_alpha", self.atr_alpha)?;
        if self.hrr_length == 0 {
            return Err(Error::Config("hrr_length must be at least 1".into()));
        }
        if self.atrs == 0 {
            return Err(Error::Config("atrs must be at least 1".into()));
        }
        if self.threshold_mode == ThresholdMode::Static && !(self.threshold > 0.0) {
            return Err(Error::Config(format!(
                "static threshold must be positive, got {}",
                self.threshold
            )));
        }
        for (name, v) in [
            ("threshold_alpha", self.threshold_alpha),
            ("growth_floor", self.growth_floor),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    fn bank_params(&self) -> BankParams {
        BankParams {
            mode: self.threshold_mode,
            threshold: self.threshold,
            threshold_alpha: self.threshold_alpha,
            atr_alpha: self.atr_alpha,
            growth_floor: self.growth_floor,
        }
    }
}

/// Working-memory content: empty, or the internal representation of a
/// signal seen earlier in the episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WorkingMemory {
    Empty,
    Signal(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub step: usize,
    pub direction: Crossing,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEvent {
    pub episode: usize,
    pub step: usize,
    pub method: GrowthMethod,
    pub atr_count: usize,
    pub from_dimension: usize,
    pub to_dimension: usize,
    /// Tuples whose values were carried over (transfer only).
    pub tuples: usize,
    /// Worst absolute value mismatch after a transfer.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub context: usize,
    pub signal: Option<usize>,
    pub start: usize,
    pub steps: usize,
    pub optimal: usize,
    pub goal_reached: bool,
    pub switches: Vec<SwitchEvent>,
    pub growths: Vec<GrowthEvent>,
}

impl EpisodeRecord {
    pub fn is_optimal(&self) -> bool {
        self.goal_reached && self.steps == self.optimal
    }
}

/// Result of evaluating every (state, working memory) candidate pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection<T> {
    pub state_index: usize,
    pub wm_index: usize,
    /// Value of the chosen pair.
    pub value: T,
    /// Best value over all pairs.
    pub greedy_value: T,
    pub explored: bool,
    pub evaluations: usize,
}

/// Binds the five input slots into one HRR.
pub fn compose_input<'a, T: Scalar>(
    ledger: &'a mut SymbolLedger<T>,
    input: &InputKey,
) -> Result<&'a Hrr<T>> {
    ledger.encode(input)
}

/// Greedy argmax over `states × wms` of the composed input's value, ties to
/// the lowest `state_index * wms.len() + wm_index`. With probability
/// `epsilon` the state is then replaced by a uniform random candidate; the
/// working-memory choice stays greedy.
#[allow(clippy::too_many_arguments)]
pub fn select_action<T: Scalar, R: Rng + ?Sized>(
    network: &ValueNetwork<T>,
    ledger: &mut SymbolLedger<T>,
    states: &[Symbol],
    wms: &[Symbol],
    signal: Symbol,
    atr: Symbol,
    reward: Symbol,
    epsilon: f64,
    rng: &mut R,
) -> Result<Selection<T>> {
    if states.is_empty() || wms.is_empty() {
        return Err(Error::InvalidArgument("empty candidate set".into()));
    }
    let dim = ledger.dimension();
    if network.dimension() != dim {
        return Err(Error::DimensionMismatch {
            left: network.dimension(),
            right: dim,
        });
    }
    let mut best: Option<(usize, usize, T)> = None;
    for (si, &s) in states.iter().enumerate() {
        for (wi, &wm) in wms.iter().enumerate() {
            let u = ledger.encode(&[s, signal, wm, atr, reward])?;
            let v = network.value_unchecked(u);
            if best.is_none_or(|(_, _, b)| v > b) {
                best = Some((si, wi, v));
            }
        }
    }
    let (si, wi, greedy_value) = best.expect("non-empty candidates");
    let mut selection = Selection {
        state_index: si,
        wm_index: wi,
        value: greedy_value,
        greedy_value,
        explored: false,
        evaluations: states.len() * wms.len(),
    };
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        let r = rng.random_range(0..states.len());
        let u = ledger.encode(&[states[r], signal, wms[wi], atr, reward])?;
        selection.state_index = r;
        selection.value = network.value_unchecked(u);
        selection.explored = true;
        selection.evaluations += 1;
    }
    Ok(selection)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwitchOutcome {
    pub crossing: Crossing,
    pub switched: bool,
    /// Direction of the switch that fired, `Crossing::None` if none did.
    pub direction: Crossing,
    pub from: usize,
    pub to: usize,
    pub evaluations: usize,
}

/// Applies the switching rule for one TD error. A negative crossing moves to
/// the next ATR in order; a positive crossing moves to the ATR whose
/// substitution into `input` has the highest value (the current ATR
/// included). The caller clears its eligibility trace when `switched`.
pub fn maybe_switch_atr<T: Scalar>(
    bank: &mut AtrBank<T>,
    network: &ValueNetwork<T>,
    ledger: &mut SymbolLedger<T>,
    delta: T,
    input: &InputKey,
    mode: AblationMode,
) -> Result<SwitchOutcome> {
    let crossing = bank.crossing(delta);
    let from = bank.current();
    let mut out = SwitchOutcome {
        crossing,
        switched: false,
        direction: Crossing::None,
        from,
        to: from,
        evaluations: 0,
    };
    if !mode.allows(crossing) {
        return Ok(out);
    }
    match crossing {
        Crossing::None => return Ok(out),
        Crossing::Negative => bank.advance(),
        Crossing::Positive => {
            let mut key = *input;
            let mut best: Option<(usize, T)> = None;
            for (j, &atr) in bank.symbols().iter().enumerate() {
                key[ATR_SLOT] = atr;
                let v = network.value(ledger.encode(&key)?)?;
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            out.evaluations = bank.count();
            bank.select(best.expect("bank is never empty").0)?;
        }
    }
    out.switched = true;
    out.direction = crossing;
    out.to = bank.current();
    Ok(out)
}

#[derive(Clone, Debug)]
struct TaskSymbols {
    states: Vec<Symbol>,
    signals: Vec<Symbol>,
    wm_signals: Vec<Symbol>,
    goal: Symbol,
}

impl TaskSymbols {
    fn intern<T: Scalar>(ledger: &mut SymbolLedger<T>, task: &MazeTask) -> Result<Self> {
        let states = (0..task.size)
            .map(|i| ledger.symbol(&format!("s{i}")))
            .collect::<Result<_>>()?;
        let signals = task
            .signals
            .iter()
            .map(|s| ledger.symbol(&format!("p:{s}")))
            .collect::<Result<_>>()?;
        let wm_signals = task
            .signals
            .iter()
            .map(|s| ledger.symbol(&format!("wm:{s}")))
            .collect::<Result<_>>()?;
        let goal = ledger.symbol("goal")?;
        Ok(Self {
            states,
            signals,
            wm_signals,
            goal,
        })
    }

    fn wm(&self, wm: WorkingMemory) -> Symbol {
        match wm {
            WorkingMemory::Empty => Symbol::IDENTITY,
            WorkingMemory::Signal(i) => self.wm_signals[i],
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Choice<T> {
    position: usize,
    wm: WorkingMemory,
    input: InputKey,
    value: T,
    greedy_value: T,
}

/// One learner: its ledger, critic, trace, ATR bank and exploration stream.
#[derive(Clone, Debug)]
pub struct Agent<T: Scalar> {
    config: AgentConfig,
    ledger: SymbolLedger<T>,
    network: ValueNetwork<T>,
    trace: EligibilityTrace<T>,
    bank: AtrBank<T>,
    rng: ChaCha8Rng,
    symbols: TaskSymbols,
    evaluations: u64,
}

impl<T: Scalar> Agent<T> {
    /// Atoms come from stream 1 of `seed`, weights and exploration from
    /// stream 2.
    pub fn new(config: &AgentConfig, task: &MazeTask, seed: u64) -> Result<Self> {
        config.validate()?;
        task.validate()?;
        let mut ledger_rng = ChaCha8Rng::seed_from_u64(seed);
        ledger_rng.set_stream(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);

        let mut ledger = SymbolLedger::new(config.hrr_length, ledger_rng)?;
        let symbols = TaskSymbols::intern(&mut ledger, task)?;
        let atrs = (0..config.atrs)
            .map(|i| ledger.symbol(&format!("atr{i}")))
            .collect::<Result<Vec<_>>>()?;
        let bank = AtrBank::new(atrs, config.bank_params())?;
        let network = ValueNetwork::random(config.hrr_length, &mut rng)?;
        let trace = EligibilityTrace::new(config.hrr_length, T::of(config.lambda))?;
        Ok(Self {
            config: config.clone(),
            ledger,
            network,
            trace,
            bank,
            rng,
            symbols,
            evaluations: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.ledger.dimension()
    }

    pub fn ledger(&self) -> &SymbolLedger<T> {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut SymbolLedger<T> {
        &mut self.ledger
    }

    pub fn network(&self) -> &ValueNetwork<T> {
        &self.network
    }

    pub fn network_mut(&mut self) -> &mut ValueNetwork<T> {
        &mut self.network
    }

    pub fn trace(&self) -> &EligibilityTrace<T> {
        &self.trace
    }

    pub fn bank(&self) -> &AtrBank<T> {
        &self.bank
    }

    /// Network evaluations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Input key for a state with empty signal, memory and reward slots
    /// under the current ATR.
    pub fn state_key(&self, position: usize) -> InputKey {
        let i = Symbol::IDENTITY;
        [
            self.symbols.states[position],
            i,
            i,
            self.bank.current_symbol(),
            i,
        ]
    }

    pub fn input_key(
        &self,
        position: usize,
        signal: Option<usize>,
        wm: WorkingMemory,
        atr: usize,
        goal: bool,
    ) -> InputKey {
        [
            self.symbols.states[position],
            signal.map_or(Symbol::IDENTITY, |s| self.symbols.signals[s]),
            self.symbols.wm(wm),
            self.bank.symbols()[atr],
            if goal { self.symbols.goal } else { Symbol::IDENTITY },
        ]
    }

    pub fn value_of(&mut self, key: &InputKey) -> Result<T> {
        self.evaluations += 1;
        let u = self.ledger.encode(key)?;
        self.network.value(u)
    }

    /// Runs one episode against `task`, drawing the spawn from `env_rng`.
    pub fn run_episode<R: Rng + ?Sized>(
        &mut self,
        task: &MazeTask,
        env_rng: &mut R,
        episode: usize,
        phase: Phase,
    ) -> Result<EpisodeRecord> {
        let mut state = task.reset(env_rng, episode);
        let mut record = EpisodeRecord {
            episode,
            context: state.context,
            signal: state.signal,
            start: state.start,
            steps: 0,
            optimal: task.optimal_steps(state.start, state.context, state.signal)?,
            goal_reached: false,
            switches: Vec::new(),
            growths: Vec::new(),
        };
        if task.is_goal(&state) {
            record.goal_reached = true;
            return Ok(record);
        }
        let (alpha, epsilon) = match phase {
            Phase::Train => (self.config.alpha_train, self.config.epsilon_train),
            Phase::Test => (self.config.alpha_test, self.config.epsilon_test),
        };
        let alpha = T::of(alpha);
        let gamma = T::of(self.config.gamma);

        self.trace.clear();
        let mut choice = self.choose(task, &state, WorkingMemory::Empty, epsilon)?;
        loop {
            let outcome = task.step(&mut state, choice.position)?;
            let wm = choice.wm;
            let terminal = outcome.goal_token;
            let next = if terminal {
                None
            } else {
                Some(self.choose(task, &state, wm, epsilon)?)
            };
            let v_next = next.map_or(T::zero(), |c| c.greedy_value);
            let delta = td_error_signed(
                self.config.bootstrap_sign,
                T::of(outcome.reward),
                gamma,
                v_next,
                choice.value,
                terminal,
            );

            let switch = maybe_switch_atr(
                &mut self.bank,
                &self.network,
                &mut self.ledger,
                delta,
                &choice.input,
                self.config.ablation_mode,
            )?;
            self.evaluations += switch.evaluations as u64;
            if switch.switched {
                self.trace.clear();
                record.switches.push(SwitchEvent {
                    step: state.step_count,
                    direction: switch.direction,
                    from: switch.from,
                    to: switch.to,
                });
            }
            self.bank.update_values(delta);
            self.bank
                .update_threshold(delta, switch.switched && self.config.freeze_threshold_on_switch);

            let grew = if switch.crossing != Crossing::None
                && self.config.atr_count_mode == AtrCountMode::Dynamic
                && self.bank.wants_growth()
            {
                let event = self.grow(episode, state.step_count)?;
                record.growths.push(event);
                true
            } else {
                false
            };

            // after growth the step's input lives in the old space
            if !grew {
                let u = self.ledger.encode(&choice.input)?;
                self.trace.update(u)?;
                self.network.update(alpha, delta, &self.trace)?;
            }

            if outcome.done {
                record.steps = state.step_count;
                record.goal_reached = terminal;
                return Ok(record);
            }
            choice = match next {
                Some(c) if !switch.switched && !grew => c,
                _ => self.choose(task, &state, wm, epsilon)?,
            };
        }
    }

    fn choose(
        &mut self,
        task: &MazeTask,
        state: &EpisodeState,
        wm: WorkingMemory,
        epsilon: f64,
    ) -> Result<Choice<T>> {
        let positions = task.candidate_states(state.position);
        let states: Vec<Symbol> = positions.iter().map(|&p| self.symbols.states[p]).collect();
        let observed = state.observed_signal();

        let mut wm_options: Vec<WorkingMemory> = Vec::with_capacity(3);
        for option in [observed.map(WorkingMemory::Signal), Some(wm), Some(WorkingMemory::Empty)]
            .into_iter()
            .flatten()
        {
            if !wm_options.contains(&option) {
                wm_options.push(option);
            }
        }
        let wms: Vec<Symbol> = wm_options.iter().map(|&w| self.symbols.wm(w)).collect();
        let signal = observed.map_or(Symbol::IDENTITY, |s| self.symbols.signals[s]);
        let reward = if task.is_goal(state) {
            self.symbols.goal
        } else {
            Symbol::IDENTITY
        };
        let atr = self.bank.current_symbol();

        let sel = select_action(
            &self.network,
            &mut self.ledger,
            &states,
            &wms,
            signal,
            atr,
            reward,
            epsilon,
            &mut self.rng,
        )?;
        self.evaluations += sel.evaluations as u64;
        Ok(Choice {
            position: positions[sel.state_index],
            wm: wm_options[sel.wm_index],
            input: [states[sel.state_index], signal, wms[sel.wm_index], atr, reward],
            value: sel.value,
            greedy_value: sel.greedy_value,
        })
    }

    /// Adds an ATR, grows the representation space and migrates the critic
    /// with the configured method. Works in either ATR count mode.
    pub fn force_growth(&mut self) -> Result<GrowthEvent> {
        self.grow(0, 0)
    }

    fn grow(&mut self, episode: usize, step: usize) -> Result<GrowthEvent> {
        let from_dimension = self.ledger.dimension();
        let method = self.config.growth_method;

        // learned component of every value seen so far, in the old space
        let old: Vec<(InputKey, T)> = if method == GrowthMethod::Transfer {
            let keys: Vec<InputKey> = self
                .ledger
                .compound_keys()
                .filter_map(|k| k.try_into().ok())
                .collect();
            keys.into_iter()
                .map(|k| {
                    let u = self.ledger.encode(&k)?;
                    Ok((k, self.network.value(u)? - self.network.bias()))
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };

        let name = format!("atr{}", self.bank.count());
        let atr = self.ledger.symbol(&name)?;
        self.bank.grow(atr);
        let to_dimension = grow_dimension(from_dimension, self.bank.count())?;
        self.ledger.regrow(to_dimension)?;
        self.trace = EligibilityTrace::new(to_dimension, T::of(self.config.lambda))?;

        let mut residual = None;
        match method {
            GrowthMethod::Reset => {
                self.network = ValueNetwork::random(to_dimension, &mut self.rng)?;
            }
            GrowthMethod::Transfer if old.is_empty() => {
                self.network = ValueNetwork::with_weights(Hrr::zeros(to_dimension)?);
                residual = Some(0.0);
            }
            GrowthMethod::Transfer => {
                for (k, _) in &old {
                    self.ledger.encode(k)?;
                }
                let rows: Vec<&Hrr<T>> = old
                    .iter()
                    .map(|(k, _)| self.ledger_encoded(k))
                    .collect::<Result<_>>()?;
                let values: Vec<T> = old.iter().map(|(_, v)| *v).collect();
                let solution = stack_and_solve(&rows, &values)?;
                residual = Some(solution.residual);
                self.network = ValueNetwork::with_weights(solution.weights);
            }
        }
        Ok(GrowthEvent {
            episode,
            step,
            method,
            atr_count: self.bank.count(),
            from_dimension,
            to_dimension,
            tuples: old.len(),
            residual,
        })
    }

    fn ledger_encoded(&self, key: &InputKey) -> Result<&Hrr<T>> {
        // encode() needs &mut; keys were encoded just above
        self.ledger
            .cached(key)
            .ok_or_else(|| Error::UnknownSymbol(format!("{key:?}")))
    }
}
