//! Clean a story and show how each chunking method splits it.
//!
//!     cargo run --example clean_and_chunk [-- story.txt]

use storyframes::text::{chunk, clean, split_units, ChunkMethod, ChunkingSpec};

const SAMPLE: &str = "<h1>The spider</h1>\n<p>The spider climbed up the wall. It rained hard!</p>\n\
<p>The rain washed the spider down &amp; away.</p>\n<script>track()</script>\n\
Read more at https://example.com/story\nThe sun came out. The spider climbed again.";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    let text = clean(&raw)?;
    println!("cleaned:\n{text}\n");

    for method in
        [ChunkMethod::ByLine, ChunkMethod::BySentence, ChunkMethod::SentenceWindow, ChunkMethod::LinePairStack]
    {
        let spec = ChunkingSpec { method, window: 3, stride: 2 };
        let units = split_units(&text, method.unit_kind());
        println!("{method:?} ({} units)", units.len());
        for c in chunk(&units, &spec)? {
            println!("  #{} {:?}: {}", c.index, c.span, c.text.replace('\n', " / "));
        }
    }
    Ok(())
}
