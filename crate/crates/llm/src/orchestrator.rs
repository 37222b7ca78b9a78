//! Agents, the turn loop, delegation between tasks and deviation handling.

use std::sync::Arc;

use crate::{complete, ChatBackend, LlmError, Message, ToolCall, ToolSchema, Trace, TraceEvent};

/// Completion sentinel: a line `DONE`, optionally followed by `: <result>`.
pub const DONE: &str = "DONE";
/// Corrective re-prompts allowed before a task fails with ProtocolDeviation.
pub const CORRECTIVE_BUDGET: u32 = 2;

pub const PLANNER_MAX_TURNS: u32 = 20;
pub const MANAGER_MAX_TURNS: u32 = 60;
pub const RETRIEVER_MAX_TURNS: u32 = 4;

#[derive(Clone)]
pub struct AgentSpec {
    pub name: String,
    pub system_prompt: String,
    pub tools: Vec<ToolSchema>,
    pub backend: Arc<dyn ChatBackend>,
    pub max_turns: u32,
    /// Free text without the sentinel counts as a protocol deviation.
    pub tool_required: bool,
    /// A free-text reply ends the task with that text as the result.
    pub free_text_is_result: bool,
}

impl AgentSpec {
    pub fn new(name: impl Into<String>, system_prompt: impl Into<String>, backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            name: name.into(),
            system_prompt: system_prompt.into(),
            tools: Vec::new(),
            backend,
            max_turns: PLANNER_MAX_TURNS,
            tool_required: false,
            free_text_is_result: false,
        }
    }

    pub fn with_tools(mut self, tools: Vec<ToolSchema>) -> Self {
        self.tools = tools;
        self
    }

    pub fn with_max_turns(mut self, max_turns: u32) -> Self {
        self.max_turns = max_turns;
        self
    }

    pub fn tool_required(mut self, yes: bool) -> Self {
        self.tool_required = yes;
        self
    }

    pub fn free_text_is_result(mut self, yes: bool) -> Self {
        self.free_text_is_result = yes;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskStatus {
    Running,
    Done(Message),
    Failed(String),
}

/// Bookkeeping for one run of an agent.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskHandle {
    pub agent: String,
    /// Path of the delegating task, if any.
    pub parent: Option<String>,
    pub turn_count: u32,
    pub max_turns: u32,
    pub corrective_turns: u32,
    pub status: TaskStatus,
}

/// An LLM agent with its conversation memory. Memory only ever grows.
pub struct Agent {
    spec: AgentSpec,
    memory: Vec<Message>,
    last_task: Option<TaskHandle>,
}

impl Agent {
    pub fn new(spec: AgentSpec) -> Result<Self, TaskError> {
        if spec.system_prompt.trim().is_empty() {
            return Err(TaskError::new(&spec.name, TaskErrorKind::InvalidInput("system prompt is empty".into())));
        }
        if spec.max_turns == 0 {
            return Err(TaskError::new(&spec.name, TaskErrorKind::InvalidInput("max_turns must be at least 1".into())));
        }
        let mut system = spec.system_prompt.trim_end().to_string();
        for tool in &spec.tools {
            system.push_str("\n\n");
            system.push_str(&tool.prompt_text());
        }
        Ok(Self { memory: vec![Message::system(system)], spec, last_task: None })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    pub fn memory(&self) -> &[Message] {
        &self.memory
    }

    pub fn last_task(&self) -> Option<&TaskHandle> {
        self.last_task.as_ref()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TaskErrorKind {
    #[error("exceeded {max_turns} turns")]
    MaxTurnsExceeded { max_turns: u32 },
    #[error("protocol deviation after {attempts} corrective attempts: {reason}")]
    ProtocolDeviation { attempts: u32, reason: String },
    #[error("delegation cycle: `{agent}` is already on the task chain")]
    DelegationCycle { agent: String },
    #[error(transparent)]
    Backend(LlmError),
    #[error("tool failed: {0}")]
    Tool(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// A task failure, located by the task path where it happened.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {kind}")]
pub struct TaskError {
    pub path: String,
    pub kind: TaskErrorKind,
}

impl TaskError {
    pub fn new(path: impl Into<String>, kind: TaskErrorKind) -> Self {
        Self { path: path.into(), kind }
    }
}

/// What a tool handler wants the loop to do next.
#[derive(Debug, Clone, PartialEq)]
pub enum ToolOutcome {
    /// Append the text as the tool's result and keep going.
    Reply(String),
    /// End the task with this result.
    Finish(String),
}

pub trait ToolHandler {
    fn handle(&mut self, call: &ToolCall, cx: &mut TaskCx<'_>) -> Result<ToolOutcome, TaskError>;
}

/// Handler for agents without tools.
pub struct NoTools;

impl ToolHandler for NoTools {
    fn handle(&mut self, call: &ToolCall, cx: &mut TaskCx<'_>) -> Result<ToolOutcome, TaskError> {
        Err(cx.error(TaskErrorKind::Tool(format!("no handler for `{}`", call.tool_name))))
    }
}

/// Any unit of work that can be run or delegated to: LLM agents and native
/// code alike.
pub trait Task {
    fn name(&self) -> &str;
    fn run(&mut self, input: Message, cx: &mut TaskCx<'_>) -> Result<Message, TaskError>;
}

/// An agent paired with the handler for its tools.
pub struct LlmTask<'a> {
    pub agent: &'a mut Agent,
    pub handler: &'a mut dyn ToolHandler,
}

impl Task for LlmTask<'_> {
    fn name(&self) -> &str {
        self.agent.name()
    }

    fn run(&mut self, input: Message, cx: &mut TaskCx<'_>) -> Result<Message, TaskError> {
        cx.run_agent(self.agent, input, self.handler)
    }
}

/// Execution context of the task currently running.
pub struct TaskCx<'t> {
    trace: &'t Trace,
    path: Vec<String>,
}

/// Runs `task` as the root of a new task tree.
pub fn run_task(trace: &Trace, task: &mut dyn Task, input: Message) -> Result<Message, TaskError> {
    let mut cx = TaskCx { trace, path: Vec::new() };
    cx.enter(task, input)
}

/// Extracts the result of a reply containing the sentinel line.
pub fn parse_done(content: &str) -> Option<String> {
    let lines: Vec<&str> = content.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        let t = line.trim();
        let rest = if t == DONE {
            ""
        } else if let Some(r) = t.strip_prefix("DONE:") {
            r.trim()
        } else {
            continue;
        };
        if !rest.is_empty() {
            return Some(rest.to_string());
        }
        return Some(lines[..i].join("\n").trim().to_string());
    }
    None
}

impl TaskCx<'_> {
    pub fn path(&self) -> String {
        self.path.join("/")
    }

    pub fn trace(&self) -> &Trace {
        self.trace
    }

    pub fn error(&self, kind: TaskErrorKind) -> TaskError {
        TaskError::new(self.path(), kind)
    }

    /// Suspends the current task and runs `child` to completion.
    pub fn delegate(&mut self, child: &mut dyn Task, request: Message) -> Result<Message, TaskError> {
        if self.path.iter().any(|p| p == child.name()) {
            return Err(TaskError::new(
                format!("{}/{}", self.path(), child.name()),
                TaskErrorKind::DelegationCycle { agent: child.name().to_string() },
            ));
        }
        self.trace.push(TraceEvent::Delegation { parent: self.path(), child: child.name().to_string() });
        self.enter(child, request)
    }

    fn enter(&mut self, task: &mut dyn Task, input: Message) -> Result<Message, TaskError> {
        self.path.push(task.name().to_string());
        self.trace.push(TraceEvent::TaskStarted { path: self.path() });
        let result = task.run(input, self);
        let (ok, detail) = match &result {
            Ok(m) => (true, m.content.clone()),
            Err(e) => (false, e.to_string()),
        };
        self.trace.push(TraceEvent::TaskFinished { path: self.path(), ok, detail });
        self.path.pop();
        result
    }

    /// Appends a message to the agent's memory and records it in the trace.
    pub fn append(&self, agent: &mut Agent, message: Message) {
        self.trace.push(TraceEvent::Message { path: self.path(), message: message.clone() });
        agent.memory.push(message);
    }

    /// The turn loop for an LLM agent at the current path.
    pub fn run_agent(
        &mut self,
        agent: &mut Agent,
        input: Message,
        handler: &mut dyn ToolHandler,
    ) -> Result<Message, TaskError> {
        let parent = (self.path.len() > 1).then(|| self.path[..self.path.len() - 1].join("/"));
        let mut handle = TaskHandle {
            agent: agent.name().to_string(),
            parent,
            turn_count: 0,
            max_turns: agent.spec.max_turns,
            corrective_turns: 0,
            status: TaskStatus::Running,
        };
        let result = self.turn_loop(agent, input, handler, &mut handle);
        handle.status = match &result {
            Ok(m) => TaskStatus::Done(m.clone()),
            Err(e) => TaskStatus::Failed(e.to_string()),
        };
        agent.last_task = Some(handle);
        result
    }

    fn turn_loop(
        &mut self,
        agent: &mut Agent,
        input: Message,
        handler: &mut dyn ToolHandler,
        handle: &mut TaskHandle,
    ) -> Result<Message, TaskError> {
        self.append(agent, input);
        let mut deviations = 0;
        while handle.turn_count < handle.max_turns {
            handle.turn_count += 1;
            let reply = complete(agent.spec.backend.as_ref(), &agent.memory, &agent.spec.tools);
            let deviation = match reply {
                Ok(msg) => {
                    let call = msg.tool_call.clone();
                    let content = msg.content.clone();
                    self.append(agent, msg);
                    if let Some(call) = call {
                        deviations = 0;
                        self.trace
                            .push(TraceEvent::ToolDispatch { path: self.path(), tool_name: call.tool_name.clone() });
                        match handler.handle(&call, self)? {
                            ToolOutcome::Reply(text) => {
                                self.append(agent, Message::tool_result(call, text));
                                continue;
                            }
                            ToolOutcome::Finish(text) => return Ok(Message::assistant(text)),
                        }
                    }
                    if let Some(result) = parse_done(&content) {
                        return Ok(Message::assistant(result));
                    }
                    if agent.spec.free_text_is_result {
                        return Ok(Message::assistant(content));
                    }
                    if !agent.spec.tool_required {
                        self.append(
                            agent,
                            Message::user(format!(
                                "Continue with the task. When it is complete, reply with a line `{DONE}: <result>`."
                            )),
                        );
                        continue;
                    }
                    "a tool call was required but the reply was free text".to_string()
                }
                Err(LlmError::MalformedToolPayload { tool_name, path, message, raw }) => {
                    self.append(agent, Message::assistant(raw));
                    format!("malformed `{tool_name}` payload at `{path}`: {message}")
                }
                Err(e) => return Err(self.error(TaskErrorKind::Backend(e))),
            };

            deviations += 1;
            self.trace.push(TraceEvent::Deviation {
                path: self.path(),
                attempt: deviations,
                reason: deviation.clone(),
            });
            if deviations > CORRECTIVE_BUDGET {
                return Err(
                    self.error(TaskErrorKind::ProtocolDeviation { attempts: CORRECTIVE_BUDGET, reason: deviation })
                );
            }
            handle.corrective_turns += 1;
            self.append(agent, Message::user(corrective_prompt(&deviation, &agent.spec.tools)));
        }
        Err(self.error(TaskErrorKind::MaxTurnsExceeded { max_turns: handle.max_turns }))
    }
}

fn corrective_prompt(reason: &str, tools: &[ToolSchema]) -> String {
    let mut text = format!("Your previous reply did not follow the required format: {reason}.");
    if tools.is_empty() {
        text.push_str(&format!(" Reply with a line `{DONE}: <result>` when you are finished."));
    } else {
        text.push_str(" Reply with exactly one JSON object calling one of these tools:");
        for t in tools {
            text.push_str("\n\n");
            text.push_str(&t.prompt_text());
        }
    }
    text
}
