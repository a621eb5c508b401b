//! CoNLL-U dependency trees.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DepError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("sentence starting at line {line}: {message}")]
    Tree { line: usize, message: String },
    #[error("token index {0} out of range")]
    Index(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepToken {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    /// 0 marks the root.
    pub head: usize,
    pub deprel: String,
    pub char_start: Option<usize>,
    pub char_end: Option<usize>,
}

impl DepToken {
    pub fn is_verbal(&self) -> bool {
        matches!(self.upos.as_str(), "VERB" | "AUX")
    }

    pub fn is_nominal(&self) -> bool {
        matches!(self.upos.as_str(), "NOUN" | "PRON" | "PROPN")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepSentence {
    pub tokens: Vec<DepToken>,
    pub text: String,
}

impl DepSentence {
    /// Validates a token list and wraps it into a sentence.
    pub fn new(tokens: Vec<DepToken>, text: Option<String>) -> Result<Self, DepError> {
        validate(&tokens, 0)?;
        let text = text.unwrap_or_else(|| {
            tokens
                .iter()
                .map(|t| t.form.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        });
        Ok(DepSentence { tokens, text })
    }

    pub fn token(&self, index: usize) -> Result<&DepToken, DepError> {
        index
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .ok_or(DepError::Index(index))
    }

    pub fn root(&self) -> &DepToken {
        self.tokens
            .iter()
            .find(|t| t.head == 0)
            .expect("validated sentence has a root")
    }

    /// Tokens headed by `index`, optionally restricted to one relation, in
    /// index order.
    pub fn children(&self, index: usize, deprel: Option<&str>) -> Result<Vec<&DepToken>, DepError> {
        self.token(index)?;
        Ok(self
            .tokens
            .iter()
            .filter(|t| t.head == index && deprel.is_none_or(|d| t.deprel == d))
            .collect())
    }

    /// Indices of the full subtree below `index` (inclusive), ascending.
    pub fn subtree(&self, index: usize) -> Result<Vec<usize>, DepError> {
        self.token(index)?;
        let mut inside = vec![false; self.tokens.len() + 1];
        inside[index] = true;
        // Heads may point right, so iterate to a fixpoint.
        let mut changed = true;
        while changed {
            changed = false;
            for t in &self.tokens {
                if !inside[t.index] && t.head != 0 && inside[t.head] {
                    inside[t.index] = true;
                    changed = true;
                }
            }
        }
        Ok((1..=self.tokens.len()).filter(|&i| inside[i]).collect())
    }

    /// Surface forms of the subtree joined by single spaces.
    pub fn subtree_span(&self, index: usize) -> Result<String, DepError> {
        Ok(self
            .subtree(index)?
            .into_iter()
            .map(|i| self.tokens[i - 1].form.as_str())
            .collect::<Vec<_>>()
            .join(" "))
    }
}

fn validate(tokens: &[DepToken], line: usize) -> Result<(), DepError> {
    let tree = |message: String| DepError::Tree { line, message };
    if tokens.is_empty() {
        return Err(tree("empty sentence".into()));
    }
    for (i, t) in tokens.iter().enumerate() {
        if t.index != i + 1 {
            return Err(tree(format!("token ids not contiguous at id {}", t.index)));
        }
        if t.head > tokens.len() {
            return Err(tree(format!("token {} has head {} out of range", t.index, t.head)));
        }
        if t.head == t.index {
            return Err(tree(format!("token {} heads itself", t.index)));
        }
    }
    let roots = tokens.iter().filter(|t| t.head == 0).count();
    if roots != 1 {
        return Err(tree(format!("expected exactly one root, found {roots}")));
    }
    for t in tokens {
        let mut cur = t.head;
        let mut steps = 0;
        while cur != 0 {
            steps += 1;
            if steps > tokens.len() {
                return Err(tree(format!("head cycle through token {}", t.index)));
            }
            cur = tokens[cur - 1].head;
        }
    }
    Ok(())
}

/// Fills char offsets by matching forms left to right against `text`.
fn assign_offsets(tokens: &mut [DepToken], text: &str) {
    let chars: Vec<char> = text.chars().collect();
    let mut cursor = 0;
    for t in tokens.iter_mut() {
        let form: Vec<char> = t.form.chars().collect();
        if form.is_empty() || form.len() > chars.len() {
            continue;
        }
        let found = (cursor..=chars.len() - form.len()).find(|&s| chars[s..s + form.len()] == form[..]);
        if let Some(s) = found {
            t.char_start = Some(s);
            t.char_end = Some(s + form.len());
            cursor = s + form.len();
        }
    }
}

/// Parses a CoNLL-U document. Multiword ranges and empty nodes are skipped.
pub fn parse_conllu(text: &str) -> Result<Vec<DepSentence>, DepError> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<DepToken> = Vec::new();
    let mut sent_text: Option<String> = None;
    let mut start_line = 1;

    let mut flush = |tokens: &mut Vec<DepToken>, sent_text: &mut Option<String>, start_line: usize| {
        if tokens.is_empty() {
            *sent_text = None;
            return Ok(());
        }
        let mut toks = std::mem::take(tokens);
        validate(&toks, start_line)?;
        if let Some(t) = sent_text.as_deref() {
            assign_offsets(&mut toks, t);
        }
        let s = DepSentence::new(toks, sent_text.take())?;
        sentences.push(s);
        Ok::<(), DepError>(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut tokens, &mut sent_text, start_line)?;
            continue;
        }
        if tokens.is_empty() && sent_text.is_none() {
            start_line = line_no;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(t) = comment.trim_start().strip_prefix("text =") {
                sent_text = Some(t.trim().to_string());
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(DepError::Format {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0].parse().map_err(|_| DepError::Format {
            line: line_no,
            message: format!("non-integer id `{}`", cols[0]),
        })?;
        let head: usize = cols[6].parse().map_err(|_| DepError::Format {
            line: line_no,
            message: format!("non-integer head `{}`", cols[6]),
        })?;
        let form = cols[1].to_string();
        let lemma = if cols[2] == "_" {
            form.to_lowercase()
        } else {
            cols[2].to_string()
        };
        tokens.push(DepToken {
            index,
            form,
            lemma,
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
            char_start: None,
            char_end: None,
        });
    }
    flush(&mut tokens, &mut sent_text, start_line)?;
    Ok(sentences)
}
