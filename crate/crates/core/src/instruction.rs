//! The animation instruction language.
//!
//! ```text
//! program  := command*
//! command  := insert | remove | push | spin | gravity
//! insert   := "insert" IDENT "from" PATH "at" "(" NUM "," NUM "," NUM ")" props?
//! props    := ("mass" NUM)? ("friction" NUM)? ("elasticity" NUM)?
//! remove   := "remove" IDENT
//! push     := "push" IDENT "force" "(" NUM "," NUM "," NUM ")" ("at" NUM "s")? ("for" NUM "s")?
//! spin     := "spin" IDENT "torque" NUM ("at" NUM "s")? ("for" NUM "s")?
//! gravity  := "set" "gravity" "(" NUM "," NUM ")"
//! ```
//!
//! Whitespace is insignificant and `#` starts a comment running to the end
//! of the line. A PATH is either a bare word or a double-quoted string with
//! `\\`, `\"`, `\n`, `\t` and `\r` escapes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use image::RgbaImage;
use serde::Serialize;
use thiserror::Error;

use crate::scene::{
    self, check_body, check_body_ranges, BodySpec, ImageAsset, Scene, SceneError, Violation,
    DEFAULT_ELASTICITY, DEFAULT_FRICTION,
};

/// Mass given to inserted bodies without an explicit `mass` property.
pub const DEFAULT_INSERT_MASS: f64 = 1.0;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct InstructionProgram {
    pub commands: Vec<Command>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Insert(InsertCommand),
    Remove { body: String },
    Control(ControlCommand),
    SetGravity { gravity: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InsertCommand {
    pub id: String,
    pub sprite: String,
    pub position: [f64; 2],
    pub depth: f64,
    pub mass: Option<f64>,
    pub friction: Option<f64>,
    pub elasticity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlCommand {
    pub body: String,
    pub action: ControlAction,
    /// Seconds after the start of the simulation.
    pub start: f64,
    /// Seconds; `None` means a single timestep.
    pub duration: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    /// Force in newtons (x, y in the image plane, z along depth).
    Push { force: [f64; 3] },
    /// Planar torque in N·m.
    Spin { torque: f64 },
}

impl ControlCommand {
    pub fn force(&self) -> [f64; 3] {
        match self.action {
            ControlAction::Push { force } => force,
            ControlAction::Spin { .. } => [0.0; 3],
        }
    }

    pub fn torque(&self) -> f64 {
        match self.action {
            ControlAction::Push { .. } => 0.0,
            ControlAction::Spin { torque } => torque,
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq)]
enum TokenKind {
    Word(String),
    Str(String),
    Number(f64),
    LParen,
    RParen,
    Comma,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Word(w) => write!(f, "`{w}`"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Number(n) => write!(f, "number {n}"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: TokenKind,
    line: usize,
    column: usize,
}

#[derive(Clone, Debug, Error, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    /// Tokens that would have been accepted here; empty for lexical and
    /// value errors.
    pub expected: Vec<String>,
    pub message: String,
}

fn is_word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '#' | '"')
}

fn starts_number(c: char, next: Option<char>) -> bool {
    c.is_ascii_digit()
        || (matches!(c, '+' | '-' | '.')
            && next.is_some_and(|n| n.is_ascii_digit() || (c != '.' && n == '.')))
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            src,
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn error(&self, line: usize, column: usize, message: String) -> SyntaxError {
        SyntaxError {
            line,
            column,
            expected: Vec::new(),
            message,
        }
    }

    fn tokenize(mut self) -> Result<Vec<Token>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            while let Some(c) = self.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '#' {
                    while self.peek().is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let (line, column) = (self.line, self.column);
            let Some(c) = self.peek() else {
                out.push(Token {
                    kind: TokenKind::Eof,
                    line,
                    column,
                });
                return Ok(out);
            };
            let kind = match c {
                '(' => {
                    self.bump();
                    TokenKind::LParen
                }
                ')' => {
                    self.bump();
                    TokenKind::RParen
                }
                ',' => {
                    self.bump();
                    TokenKind::Comma
                }
                '"' => self.string(line, column)?,
                c if starts_number(c, self.peek2()) => self.number(line, column)?,
                _ => {
                    let start = self.offset();
                    while self.peek().is_some_and(is_word_char) {
                        self.bump();
                    }
                    let end = self.offset();
                    TokenKind::Word(self.src[start..end].to_string())
                }
            };
            out.push(Token { kind, line, column });
        }
    }

    fn string(&mut self, line: usize, column: usize) -> Result<TokenKind, SyntaxError> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(self.error(line, column, "unterminated string".into())),
                Some('"') => return Ok(TokenKind::Str(s)),
                Some('\\') => {
                    let (el, ec) = (self.line, self.column);
                    match self.bump() {
                        Some('\\') => s.push('\\'),
                        Some('"') => s.push('"'),
                        Some('n') => s.push('\n'),
                        Some('t') => s.push('\t'),
                        Some('r') => s.push('\r'),
                        Some(other) => {
                            return Err(self.error(el, ec, format!("unknown escape `\\{other}`")))
                        }
                        None => {
                            return Err(self.error(line, column, "unterminated string".into()))
                        }
                    }
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self, line: usize, column: usize) -> Result<TokenKind, SyntaxError> {
        let start = self.offset();
        if matches!(self.peek(), Some('+' | '-')) {
            self.bump();
        }
        let digits = |lx: &mut Self| {
            let mut n = 0;
            while lx.peek().is_some_and(|c| c.is_ascii_digit()) {
                lx.bump();
                n += 1;
            }
            n
        };
        let mut mantissa = digits(self);
        if self.peek() == Some('.') {
            self.bump();
            mantissa += digits(self);
        }
        if mantissa == 0 {
            return Err(self.error(line, column, "malformed number".into()));
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let next = self.peek2();
            let signed_digit = {
                let mut it = self.chars.clone();
                it.next();
                it.next();
                it.next().is_some_and(|(_, c)| c.is_ascii_digit())
            };
            if next.is_some_and(|c| c.is_ascii_digit())
                || (matches!(next, Some('+' | '-')) && signed_digit)
            {
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
                digits(self);
            }
        }
        let end = self.offset();
        let text = &self.src[start..end];
        let value: f64 = text
            .parse()
            .map_err(|_| self.error(line, column, format!("malformed number `{text}`")))?;
        if !value.is_finite() {
            return Err(self.error(line, column, format!("number `{text}` is out of range")));
        }
        Ok(TokenKind::Number(value))
    }
}

// ---------------------------------------------------------------------------
// Parser

const COMMAND_KEYWORDS: [&str; 5] = ["insert", "remove", "push", "spin", "set"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn is_ident(word: &str) -> bool {
    let mut chars = word.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn is_bare_path(word: &str) -> bool {
    let mut chars = word.chars();
    let head = match chars.next() {
        None => false,
        Some(c) => is_word_char(c) && !starts_number(c, chars.clone().next()),
    };
    head && word.chars().all(is_word_char)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if !matches!(t.kind, TokenKind::Eof) {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T, SyntaxError> {
        let t = self.peek();
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        Err(SyntaxError {
            line: t.line,
            column: t.column,
            message: format!("expected {}, found {}", expected.join(" or "), t.kind),
            expected,
        })
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Word(w) if w == kw)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), SyntaxError> {
        if self.at_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            self.fail(&[&format!("`{kw}`")])
        }
    }

    fn punct(&mut self, kind: TokenKind, name: &str) -> Result<(), SyntaxError> {
        if self.peek().kind == kind {
            self.advance();
            Ok(())
        } else {
            self.fail(&[name])
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match &self.peek().kind {
            TokenKind::Word(w) if is_ident(w) => {
                let w = w.clone();
                self.advance();
                Ok(w)
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn number(&mut self) -> Result<f64, SyntaxError> {
        match self.peek().kind {
            TokenKind::Number(n) => {
                self.advance();
                Ok(n)
            }
            _ => self.fail(&["number"]),
        }
    }

    fn path(&mut self) -> Result<String, SyntaxError> {
        match &self.peek().kind {
            TokenKind::Word(w) | TokenKind::Str(w) => {
                let w = w.clone();
                self.advance();
                Ok(w)
            }
            _ => self.fail(&["path"]),
        }
    }

    fn tuple<const N: usize>(&mut self) -> Result<[f64; N], SyntaxError> {
        self.punct(TokenKind::LParen, "`(`")?;
        let mut out = [0.0; N];
        for (i, slot) in out.iter_mut().enumerate() {
            if i > 0 {
                self.punct(TokenKind::Comma, "`,`")?;
            }
            *slot = self.number()?;
        }
        self.punct(TokenKind::RParen, "`)`")?;
        Ok(out)
    }

    fn seconds(&mut self) -> Result<f64, SyntaxError> {
        let n = self.number()?;
        self.keyword("s")?;
        Ok(n)
    }

    fn timing(&mut self) -> Result<(f64, Option<f64>), SyntaxError> {
        let mut start = 0.0;
        if self.at_keyword("at") {
            self.advance();
            start = self.seconds()?;
        }
        let mut duration = None;
        if self.at_keyword("for") {
            self.advance();
            let t = self.peek().clone();
            let d = self.seconds()?;
            if d < 0.0 {
                return Err(SyntaxError {
                    line: t.line,
                    column: t.column,
                    expected: Vec::new(),
                    message: format!("duration must be non-negative, got {d}"),
                });
            }
            duration = Some(d);
        }
        Ok((start, duration))
    }

    fn command(&mut self) -> Result<Command, SyntaxError> {
        let word = match &self.peek().kind {
            TokenKind::Word(w) if COMMAND_KEYWORDS.contains(&w.as_str()) => w.clone(),
            _ => return self.fail(&["`insert`", "`remove`", "`push`", "`spin`", "`set`"]),
        };
        self.advance();
        match word.as_str() {
            "insert" => {
                let id = self.ident()?;
                self.keyword("from")?;
                let sprite = self.path()?;
                self.keyword("at")?;
                let [x, y, depth] = self.tuple::<3>()?;
                let mut props = [None; 3];
                for (slot, name) in props.iter_mut().zip(["mass", "friction", "elasticity"]) {
                    if self.at_keyword(name) {
                        self.advance();
                        *slot = Some(self.number()?);
                    }
                }
                Ok(Command::Insert(InsertCommand {
                    id,
                    sprite,
                    position: [x, y],
                    depth,
                    mass: props[0],
                    friction: props[1],
                    elasticity: props[2],
                }))
            }
            "remove" => Ok(Command::Remove {
                body: self.ident()?,
            }),
            "push" => {
                let body = self.ident()?;
                self.keyword("force")?;
                let force = self.tuple::<3>()?;
                let (start, duration) = self.timing()?;
                Ok(Command::Control(ControlCommand {
                    body,
                    action: ControlAction::Push { force },
                    start,
                    duration,
                }))
            }
            "spin" => {
                let body = self.ident()?;
                self.keyword("torque")?;
                let torque = self.number()?;
                let (start, duration) = self.timing()?;
                Ok(Command::Control(ControlCommand {
                    body,
                    action: ControlAction::Spin { torque },
                    start,
                    duration,
                }))
            }
            "set" => {
                self.keyword("gravity")?;
                let gravity = self.tuple::<2>()?;
                Ok(Command::SetGravity { gravity })
            }
            _ => unreachable!("filtered by COMMAND_KEYWORDS"),
        }
    }
}

/// Parses instruction text. Either the whole program parses or an error
/// locating the first problem is returned.
pub fn parse_program(text: &str) -> Result<InstructionProgram, SyntaxError> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut parser = Parser { tokens, pos: 0 };
    let mut commands = Vec::new();
    while !matches!(parser.peek().kind, TokenKind::Eof) {
        commands.push(parser.command()?);
    }
    Ok(InstructionProgram { commands })
}

// ---------------------------------------------------------------------------
// Formatter

fn format_path(path: &str) -> String {
    if is_bare_path(path) && !COMMAND_KEYWORDS.contains(&path) {
        return path.to_string();
    }
    let mut out = String::with_capacity(path.len() + 2);
    out.push('"');
    for c in path.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn format_timing(out: &mut String, start: f64, duration: Option<f64>) {
    if start != 0.0 {
        out.push_str(&format!(" at {start}s"));
    }
    if let Some(d) = duration {
        out.push_str(&format!(" for {d}s"));
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        match self {
            Command::Insert(ins) => {
                let [x, y] = ins.position;
                out.push_str(&format!(
                    "insert {} from {} at ({x}, {y}, {})",
                    ins.id,
                    format_path(&ins.sprite),
                    ins.depth
                ));
                for (name, value) in [
                    ("mass", ins.mass),
                    ("friction", ins.friction),
                    ("elasticity", ins.elasticity),
                ] {
                    if let Some(v) = value {
                        out.push_str(&format!(" {name} {v}"));
                    }
                }
            }
            Command::Remove { body } => out.push_str(&format!("remove {body}")),
            Command::Control(c) => {
                match c.action {
                    ControlAction::Push { force: [a, b, z] } => {
                        out.push_str(&format!("push {} force ({a}, {b}, {z})", c.body))
                    }
                    ControlAction::Spin { torque } => {
                        out.push_str(&format!("spin {} torque {torque}", c.body))
                    }
                }
                format_timing(&mut out, c.start, c.duration);
            }
            Command::SetGravity { gravity: [x, y] } => {
                out.push_str(&format!("set gravity ({x}, {y})"))
            }
        }
        f.write_str(&out)
    }
}

/// Canonical text of a program: one command per line, no trailing newline.
pub fn format_program(program: &InstructionProgram) -> String {
    program
        .commands
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

// ---------------------------------------------------------------------------
// Application

/// Where inserted sprites come from.
pub trait SpriteSource {
    fn load_sprite(&self, path: &str) -> Result<RgbaImage, SceneError>;
}

/// Resolves sprite paths relative to a directory.
impl SpriteSource for PathBuf {
    fn load_sprite(&self, path: &str) -> Result<RgbaImage, SceneError> {
        scene::load_image(&self.join(path))
    }
}

impl<F> SpriteSource for F
where
    F: Fn(&str) -> Result<RgbaImage, SceneError>,
{
    fn load_sprite(&self, path: &str) -> Result<RgbaImage, SceneError> {
        self(path)
    }
}

/// One scheduled force/torque contribution over `[start, end)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceInterval {
    pub start: f64,
    pub end: f64,
    pub force: [f64; 3],
    pub torque: f64,
}

impl ForceInterval {
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }
}

/// Timed external forces per body. Overlapping intervals sum.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ForceSchedule {
    entries: BTreeMap<String, Vec<ForceInterval>>,
}

impl ForceSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, body: &str, interval: ForceInterval) {
        self.entries
            .entry(body.to_string())
            .or_default()
            .push(interval);
    }

    pub fn remove_body(&mut self, body: &str) {
        self.entries.remove(body);
    }

    pub fn intervals(&self, body: &str) -> &[ForceInterval] {
        self.entries.get(body).map_or(&[], Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Summed force (N) and torque (N·m) acting on `body` at time `t`.
    pub fn at(&self, body: &str, t: f64) -> ([f64; 3], f64) {
        let mut force = [0.0; 3];
        let mut torque = 0.0;
        for iv in self.intervals(body).iter().filter(|iv| iv.contains(t)) {
            for (f, g) in force.iter_mut().zip(iv.force) {
                *f += g;
            }
            torque += iv.torque;
        }
        (force, torque)
    }
}

#[derive(Debug, Error)]
pub enum ApplyError {
    #[error("unknown body `{0}`")]
    UnknownBody(String),
    #[error("duplicate body id `{0}`")]
    DuplicateBodyId(String),
    #[error("inserted body properties out of range: {}", display_violations(.0))]
    RangeViolation(Vec<Violation>),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

fn display_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Applies a program to a scene in textual order, returning the edited
/// scene and the force schedule. The input scene is left untouched.
pub fn apply_instructions(
    scene: &Scene,
    program: &InstructionProgram,
    sprites: &dyn SpriteSource,
) -> Result<(Scene, ForceSchedule), ApplyError> {
    let mut out = scene.clone();
    let mut schedule = ForceSchedule::new();
    let dt = scene.sim.dt();
    for command in &program.commands {
        match command {
            Command::Insert(ins) => {
                if out.body(&ins.id).is_some() {
                    return Err(ApplyError::DuplicateBodyId(ins.id.clone()));
                }
                let image = sprites.load_sprite(&ins.sprite)?;
                let mut body = BodySpec {
                    id: ins.id.clone(),
                    sprite: ImageAsset::new(ins.sprite.clone(), image),
                    position: ins.position,
                    depth: ins.depth,
                    rotation: 0.0,
                    mass: ins.mass.unwrap_or(DEFAULT_INSERT_MASS),
                    friction: ins.friction.unwrap_or(DEFAULT_FRICTION),
                    elasticity: ins.elasticity.unwrap_or(DEFAULT_ELASTICITY),
                    initial_velocity: [0.0; 3],
                    initial_angular_velocity: 0.0,
                    is_static: false,
                    albedo: None,
                    normals: None,
                };
                let violations = check_body_ranges(&mut body, false);
                if !violations.is_empty() {
                    return Err(ApplyError::RangeViolation(violations));
                }
                check_body(&body)?;
                out.bodies.push(body);
            }
            Command::Remove { body } => {
                let idx = out
                    .bodies
                    .iter()
                    .position(|b| &b.id == body)
                    .ok_or_else(|| ApplyError::UnknownBody(body.clone()))?;
                out.bodies.remove(idx);
                schedule.remove_body(body);
            }
            Command::Control(c) => {
                if out.body(&c.body).is_none() {
                    return Err(ApplyError::UnknownBody(c.body.clone()));
                }
                let duration = c.duration.unwrap_or(dt);
                schedule.push(
                    &c.body,
                    ForceInterval {
                        start: c.start,
                        end: c.start + duration,
                        force: c.force(),
                        torque: c.torque(),
                    },
                );
            }
            Command::SetGravity { gravity } => out.gravity = *gravity,
        }
    }
    Ok((out, schedule))
}
