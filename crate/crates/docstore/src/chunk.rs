/// Slice of a document, by character offset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkSpan {
    pub char_offset: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChunkError {
    #[error("document is empty")]
    EmptyDocument,
    #[error("chunk_size ({chunk_size}) must exceed overlap ({overlap})")]
    BadParams { chunk_size: usize, overlap: usize },
}

/// Splits `doc` into chunks of at most `chunk_size` characters, consecutive
/// chunks sharing `overlap` characters.
///
/// A chunk that would cut the document mid-way ends instead just after the
/// last whitespace in its trailing 15%, when there is one and the shortened
/// chunk still exceeds the overlap.
pub fn chunk_document(doc: &str, chunk_size: usize, overlap: usize) -> Result<Vec<ChunkSpan>, ChunkError> {
    if chunk_size <= overlap {
        return Err(ChunkError::BadParams { chunk_size, overlap });
    }
    if doc.trim().is_empty() {
        return Err(ChunkError::EmptyDocument);
    }
    let chars: Vec<char> = doc.chars().collect();
    let n = chars.len();
    let tail = (chunk_size * 15 / 100).max(1);

    let mut out = Vec::new();
    let mut start = 0;
    loop {
        let mut end = (start + chunk_size).min(n);
        if end < n {
            let lo = end.saturating_sub(tail).max(start + overlap + 1);
            if let Some(ws) = (lo..=end).rev().find(|&i| chars[i - 1].is_whitespace()) {
                end = ws;
            }
        }
        out.push(ChunkSpan { char_offset: start, text: chars[start..end].iter().collect() });
        if end == n {
            return Ok(out);
        }
        start = end - overlap;
    }
}
