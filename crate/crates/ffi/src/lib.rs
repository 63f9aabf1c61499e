//! C ABI over the soccer-sim batch environment, policy runtime, statistics
//! and evaluation suite.
//!
//! Every function returns an [`SsStatus`]. On failure a description is kept
//! per thread and can be read with [`ss_last_error_message`]. Handles are
//! opaque and must be released with their matching `*_free` function.
//! Buffers are caller-owned; lengths are element counts.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use soccer_sim::batch::{FlatStepBuffers, VecEnv};
use soccer_sim::config::{ConfigError, PresetName, SimConfig};
use soccer_sim::env::{EnvError, ACTION_DIM};
use soccer_sim::evaluation::{run_suite, EvalError, Report, ReportColumn, SuiteOptions};
use soccer_sim::policy::{
    load_policy, Controller, MlpPolicy, PolicyError, PolicyFileError, ScriptedController,
};
use soccer_sim::scenario::{ScenarioError, ScenarioSpec};
use soccer_sim::stats::{student_t_ci, StatsError};

/// Bumped whenever a signature or struct layout in this header changes.
pub const SS_ABI_VERSION: u32 = 1;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferLength = 3,
    Io = 4,
    Format = 5,
    Incompatible = 6,
    EpisodeFinished = 7,
    Panic = 99,
}

/// Opaque batch of environment worlds.
pub struct SsEnv {
    inner: VecEnv,
    layout_version: CString,
}

/// Opaque loaded policy.
pub struct SsPolicy {
    inner: MlpPolicy,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SsStatus, String);

impl Failure {
    fn new(status: SsStatus, message: impl ToString) -> Self {
        Self(status, message.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let s = match &e {
            ConfigError::Io { .. } => SsStatus::Io,
            ConfigError::Parse { .. } | ConfigError::SchemaVersion { .. } => SsStatus::Format,
            _ => SsStatus::InvalidArgument,
        };
        Self::new(s, e)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::File(c) => c.into(),
            other => Self::new(SsStatus::InvalidArgument, other),
        }
    }
}

impl From<EnvError> for Failure {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::Config(c) => c.into(),
            EnvError::Scenario(s) => s.into(),
            EnvError::EpisodeFinished => Self::new(SsStatus::EpisodeFinished, e),
            EnvError::BatchLength { .. } | EnvError::BufferLength { .. } => {
                Self::new(SsStatus::BufferLength, e)
            }
            other => Self::new(SsStatus::InvalidArgument, other),
        }
    }
}

impl From<PolicyError> for Failure {
    fn from(e: PolicyError) -> Self {
        let s = match &e {
            PolicyError::Invalid(_) => SsStatus::Format,
            _ => SsStatus::Incompatible,
        };
        Self::new(s, e)
    }
}

impl From<PolicyFileError> for Failure {
    fn from(e: PolicyFileError) -> Self {
        let s = match &e {
            PolicyFileError::Io { .. } => SsStatus::Io,
            _ => SsStatus::Format,
        };
        Self::new(s, e)
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        Self::new(SsStatus::InvalidArgument, e)
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Env(e) => e.into(),
            EvalError::Policy(p) => p.into(),
            EvalError::Stats(s) => s.into(),
            other => Self::new(SsStatus::InvalidArgument, other),
        }
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SsStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("internal panic: {msg}"));
            SsStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure::new(SsStatus::NullPointer, format!("{name} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure::new(
            SsStatus::InvalidArgument,
            format!("{name} is not valid UTF-8"),
        )
    })
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut_arg<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn opt_slice_mut<'a, T>(p: *mut T, len: usize) -> Option<&'a mut [T]> {
    (!p.is_null()).then(|| std::slice::from_raw_parts_mut(p, len))
}

fn preset_config(name: &str) -> Result<SimConfig, Failure> {
    Ok(name.parse::<PresetName>()?.config())
}

fn build_env(
    config: SimConfig,
    scenario: &str,
    num_worlds: u32,
    seed: u64,
    workers: u32,
    auto_reset: bool,
    out: *mut *mut SsEnv,
) -> Result<(), Failure> {
    if num_worlds == 0 {
        return Err(Failure::new(
            SsStatus::InvalidArgument,
            "num_worlds must be positive",
        ));
    }
    let scenario = ScenarioSpec::by_name(scenario)?;
    let inner = VecEnv::new(
        config,
        scenario,
        num_worlds as usize,
        seed,
        workers as usize,
        auto_reset,
    )?;
    let layout_version = CString::new(inner.layout().version()).expect("layout version has no NUL");
    unsafe {
        *out = Box::into_raw(Box::new(SsEnv {
            inner,
            layout_version,
        }))
    };
    Ok(())
}

/// ABI version of this library; compare with `SS_ABI_VERSION` in the header.
#[no_mangle]
pub extern "C" fn ss_abi_version() -> u32 {
    SS_ABI_VERSION
}

/// Description of the last failure on this thread, or an empty string. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn ss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates `num_worlds` worlds from a built-in preset and scenario name
/// (`BS1`…`D3` or `random_train`). `workers <= 1` steps on the calling thread.
///
/// # Safety
/// `preset` and `scenario` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_env_new(
    preset: *const c_char,
    scenario: *const c_char,
    num_worlds: u32,
    seed: u64,
    workers: u32,
    auto_reset: bool,
    out: *mut *mut SsEnv,
) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = preset_config(str_arg(preset, "preset")?)?;
        build_env(
            config,
            str_arg(scenario, "scenario")?,
            num_worlds,
            seed,
            workers,
            auto_reset,
            out,
        )
    })
}

/// Like [`ss_env_new`] with the configuration given as TOML text.
///
/// # Safety
/// `config_toml` and `scenario` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_env_new_from_toml(
    config_toml: *const c_char,
    scenario: *const c_char,
    num_worlds: u32,
    seed: u64,
    workers: u32,
    auto_reset: bool,
    out: *mut *mut SsEnv,
) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = SimConfig::from_toml(str_arg(config_toml, "config_toml")?, "<config_toml>")?;
        build_env(
            config,
            str_arg(scenario, "scenario")?,
            num_worlds,
            seed,
            workers,
            auto_reset,
            out,
        )
    })
}

/// # Safety
/// `env` must come from `ss_env_new*` and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ss_env_free(env: *mut SsEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Observation floats per agent; 0 for a null handle.
///
/// # Safety
/// `env` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_env_obs_len(env: *const SsEnv) -> u32 {
    env.as_ref().map_or(0, |e| e.inner.layout().len() as u32)
}

/// # Safety
/// `env` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_env_num_agents(env: *const SsEnv) -> u32 {
    env.as_ref().map_or(0, |e| e.inner.num_agents() as u32)
}

/// # Safety
/// `env` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_env_num_worlds(env: *const SsEnv) -> u32 {
    env.as_ref().map_or(0, |e| e.inner.num_worlds() as u32)
}

/// Observation layout identifier, owned by the handle.
///
/// # Safety
/// `env` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_env_layout_version(env: *const SsEnv) -> *const c_char {
    env.as_ref()
        .map_or(ptr::null(), |e| e.layout_version.as_ptr())
}

/// Restarts every world and writes `num_worlds · num_agents · obs_len` floats.
///
/// # Safety
/// `env` must be a live handle; `observations` must hold `observations_len` floats.
#[no_mangle]
pub unsafe extern "C" fn ss_env_reset(
    env: *mut SsEnv,
    observations: *mut f32,
    observations_len: usize,
) -> SsStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| null("env"))?;
        let obs = slice_mut_arg(observations, observations_len, "observations")?;
        env.inner.reset_all_flat(obs)?;
        Ok(())
    })
}

/// Steps every world. `actions` holds `num_worlds · num_agents · 5` floats
/// (forward, lateral, angular, kick, stand). `rewards`, `terminated` and
/// `truncated` hold one entry per world. `terminal_observations`, `kicks`
/// (one byte per agent) and `successes` are optional and may be null.
///
/// # Safety
/// `env` must be a live handle and every non-null buffer must hold the
/// number of elements described above.
#[no_mangle]
pub unsafe extern "C" fn ss_env_step(
    env: *mut SsEnv,
    actions: *const f32,
    observations: *mut f32,
    rewards: *mut f32,
    terminated: *mut u8,
    truncated: *mut u8,
    terminal_observations: *mut f32,
    kicks: *mut u8,
    successes: *mut u8,
) -> SsStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| null("env"))?;
        let n = env.inner.num_worlds();
        let agents = env.inner.num_agents();
        let obs_total = n * agents * env.inner.layout().len();
        let actions = slice_arg(actions, n * agents * ACTION_DIM, "actions")?;
        let buffers = FlatStepBuffers {
            observations: slice_mut_arg(observations, obs_total, "observations")?,
            rewards: slice_mut_arg(rewards, n, "rewards")?,
            terminated: slice_mut_arg(terminated, n, "terminated")?,
            truncated: slice_mut_arg(truncated, n, "truncated")?,
            terminal_observations: opt_slice_mut(terminal_observations, obs_total),
            kicks: opt_slice_mut(kicks, n * agents),
            successes: opt_slice_mut(successes, n),
        };
        env.inner.step_flat(actions, buffers)?;
        Ok(())
    })
}

/// Loads a policy file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_policy_load(path: *const c_char, out: *mut *mut SsPolicy) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = load_policy(str_arg(path, "path")?)?;
        *out = Box::into_raw(Box::new(SsPolicy { inner }));
        Ok(())
    })
}

/// # Safety
/// `policy` must come from [`ss_policy_load`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ss_policy_free(policy: *mut SsPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Input size of the policy; 0 for a null handle.
///
/// # Safety
/// `policy` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ss_policy_input_len(policy: *const SsPolicy) -> u32 {
    policy.as_ref().map_or(0, |p| p.inner.input_size() as u32)
}

/// Fails with `Incompatible` when the policy was built for another layout.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn ss_policy_check_env(
    policy: *const SsPolicy,
    env: *const SsEnv,
) -> SsStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| null("policy"))?;
        let e = env.as_ref().ok_or_else(|| null("env"))?;
        p.inner.check_layout(&e.inner.layout().version())?;
        Ok(())
    })
}

/// Deterministic forward pass; writes 5 floats to `action_out`.
///
/// # Safety
/// `policy` must be live, `observation` must hold `observation_len` floats
/// and `action_out` must hold 5 floats.
#[no_mangle]
pub unsafe extern "C" fn ss_policy_forward(
    policy: *const SsPolicy,
    observation: *const f32,
    observation_len: usize,
    action_out: *mut f32,
) -> SsStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| null("policy"))?;
        let obs = slice_arg(observation, observation_len, "observation")?;
        let out = slice_mut_arg(action_out, ACTION_DIM, "action_out")?;
        out.copy_from_slice(&p.inner.forward(obs)?.to_array());
        Ok(())
    })
}

/// Student-t confidence interval of the sample mean.
///
/// # Safety
/// `samples` must hold `n` doubles; `mean_out` and `half_width_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ss_student_t_ci(
    samples: *const f64,
    n: usize,
    confidence: f64,
    mean_out: *mut f64,
    half_width_out: *mut f64,
) -> SsStatus {
    guard(|| {
        if mean_out.is_null() || half_width_out.is_null() {
            return Err(null("output"));
        }
        let samples = if n == 0 {
            &[][..]
        } else {
            slice_arg(samples, n, "samples")?
        };
        let ci = student_t_ci(samples, confidence)?;
        *mean_out = ci.mean;
        *half_width_out = ci.half_width;
        Ok(())
    })
}

/// Runs an evaluation suite and returns the JSON report in `*json_out`,
/// to be released with [`ss_string_free`]. A null `policy` selects the
/// built-in scripted controller. `scenarios` is comma-separated.
///
/// # Safety
/// `policy` must be live or null; string arguments NUL-terminated; `json_out` writable.
#[no_mangle]
pub unsafe extern "C" fn ss_run_suite_json(
    policy: *const SsPolicy,
    preset: *const c_char,
    scenarios: *const c_char,
    n_trials: u32,
    base_seed: u64,
    workers: u32,
    json_out: *mut *mut c_char,
) -> SsStatus {
    guard(|| {
        if json_out.is_null() {
            return Err(null("json_out"));
        }
        let preset = str_arg(preset, "preset")?;
        let config = preset_config(preset)?;
        let specs = str_arg(scenarios, "scenarios")?
            .split(',')
            .map(|s| ScenarioSpec::by_name(s.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        let scripted;
        let (controller, label): (&dyn Controller, String) = match policy.as_ref() {
            Some(p) => (&p.inner, p.inner.label()),
            None => {
                scripted = ScriptedController::new(&config);
                (&scripted, scripted.label())
            }
        };
        let options = SuiteOptions {
            workers: workers as usize,
            trace_dir: None,
        };
        let suite = run_suite(
            controller,
            &specs,
            &config,
            n_trials as usize,
            base_seed,
            &options,
        )?;
        let report = Report::new(
            preset,
            n_trials as usize,
            base_seed,
            vec![ReportColumn {
                label,
                summaries: suite.summaries,
            }],
        );
        *json_out = CString::new(report.to_json())
            .expect("JSON has no NUL")
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
