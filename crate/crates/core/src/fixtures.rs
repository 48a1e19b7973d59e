//! Deterministic synthetic data: a toy KG, lexicon, stopword list,
//! embeddings, similarity corpus, and annotated questions, so the whole
//! pipeline runs at desk scale.
//!
//! The generated world has five topics. Entity names, per-topic context
//! words, verbs, and function words are disjoint pseudo-word pools;
//! questions are templated so that mentions usually follow a verb
//! trigger, a tunable share of mentions appear with no trigger at all,
//! and non-mention "distractor" occurrences of entity names follow a
//! dedicated function word. Ambiguous surfaces own two entities from
//! different topics whose gold resolution is decidable from attribute
//! text and popularity. Same config, same bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kg_store::{KgEntity, KgStore};
use crate::question::{GoldMention, Question};
use crate::text::char_len;

const TOPICS: usize = 5;
const FUNCTION_WORDS: usize = 10;
const VERBS: usize = 10;

#[derive(Debug, Clone)]
pub struct FixtureConfig {
    pub seed: u64,
    pub n_entities: usize,
    pub n_questions: usize,
    pub vocab_size: usize,
    pub embedding_dim: usize,
    /// Fraction of surfaces owned by two entities.
    pub ambiguity_rate: f64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        FixtureConfig {
            seed: 42,
            n_entities: 50,
            n_questions: 200,
            vocab_size: 300,
            embedding_dim: 16,
            ambiguity_rate: 0.3,
        }
    }
}

/// Paths of the generated file set.
#[derive(Debug, Clone)]
pub struct FixtureFiles {
    pub kg: PathBuf,
    pub lexicon: PathBuf,
    pub stopwords: PathBuf,
    pub embeddings: PathBuf,
    pub corpus: PathBuf,
    pub questions: PathBuf,
}

impl FixtureFiles {
    pub fn in_dir(dir: &Path) -> Self {
        FixtureFiles {
            kg: dir.join("kg.jsonl"),
            lexicon: dir.join("lexicon.txt"),
            stopwords: dir.join("stopwords.txt"),
            embeddings: dir.join("embeddings.txt"),
            corpus: dir.join("corpus.txt"),
            questions: dir.join("questions.jsonl"),
        }
    }
}

struct World {
    entities: Vec<KgEntity>,
    /// Entity topic, aligned with `entities`.
    entity_topics: Vec<usize>,
    /// Distinct mention surfaces (ambiguous ones own two entities).
    surfaces: Vec<String>,
    context: Vec<Vec<String>>,
    verbs: Vec<String>,
    function_words: Vec<String>,
    /// Every word with its POS, in emission order.
    lexicon: Vec<(String, &'static str)>,
    /// word → topic (TOPICS = shared/general block).
    word_topics: Vec<(String, usize)>,
}

/// Deterministic pseudo-word source: CV syllables combined into unique
/// 2–3 syllable words.
struct WordFactory {
    syllables: Vec<String>,
    used: std::collections::BTreeSet<String>,
}

impl WordFactory {
    fn new() -> Self {
        let consonants = ["b", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
        let vowels = ["a", "e", "i", "o", "u"];
        let syllables = consonants
            .iter()
            .flat_map(|c| vowels.iter().map(move |v| format!("{c}{v}")))
            .collect();
        WordFactory {
            syllables,
            used: std::collections::BTreeSet::new(),
        }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let n = rng.gen_range(2..=3);
            let word: String = (0..n)
                .map(|_| self.syllables[rng.gen_range(0..self.syllables.len())].clone())
                .collect();
            if self.used.insert(word.clone()) {
                return word;
            }
        }
    }
}

fn validate(config: &FixtureConfig) -> Result<()> {
    if config.n_entities < 2 || config.n_questions == 0 || config.vocab_size == 0 {
        return Err(Error::invalid("fixture counts must be positive (and at least 2 entities)"));
    }
    if !(0.0..=1.0).contains(&config.ambiguity_rate) {
        return Err(Error::invalid("ambiguity_rate must lie in [0, 1]"));
    }
    if config.embedding_dim < TOPICS + 1 {
        return Err(Error::invalid(format!(
            "embedding_dim must be at least {}",
            TOPICS + 1
        )));
    }
    Ok(())
}

fn build_world(config: &FixtureConfig, rng: &mut ChaCha8Rng) -> Result<World> {
    let n_surfaces = ((config.n_entities as f64 / (1.0 + config.ambiguity_rate)).round() as usize)
        .clamp(1, config.n_entities);
    let n_ambiguous = config.n_entities - n_surfaces;
    let two_word_surfaces = n_surfaces / 5;
    let alias_count = config.n_entities * 3 / 10;
    let name_words = n_surfaces + two_word_surfaces + alias_count;
    let required = FUNCTION_WORDS + VERBS + name_words + TOPICS;
    if config.vocab_size < required {
        return Err(Error::invalid(format!(
            "vocab_size {} is too small: this config needs at least {required} words",
            config.vocab_size
        )));
    }

    let mut factory = WordFactory::new();
    let mut word_topics: Vec<(String, usize)> = Vec::new();
    let mut lexicon: Vec<(String, &'static str)> = Vec::new();

    let function_words: Vec<String> = (0..FUNCTION_WORDS).map(|_| factory.next(rng)).collect();
    for w in &function_words {
        word_topics.push((w.clone(), TOPICS));
        lexicon.push((w.clone(), "u"));
    }
    let verbs: Vec<String> = (0..VERBS).map(|_| factory.next(rng)).collect();
    for w in &verbs {
        word_topics.push((w.clone(), TOPICS));
        lexicon.push((w.clone(), "v"));
    }

    // Mention surfaces, round-robin over topics; every fifth is two-word.
    let mut surfaces = Vec::with_capacity(n_surfaces);
    let mut surface_topics = Vec::with_capacity(n_surfaces);
    for i in 0..n_surfaces {
        let topic = i % TOPICS;
        let surface = if i % 5 == 4 {
            let a = factory.next(rng);
            let b = factory.next(rng);
            for w in [&a, &b] {
                word_topics.push((w.clone(), topic));
                lexicon.push((w.clone(), "n"));
            }
            format!("{a} {b}")
        } else {
            let w = factory.next(rng);
            word_topics.push((w.clone(), topic));
            lexicon.push((w.clone(), "n"));
            w
        };
        // Phrase entry so the lexicon-iteration step can confirm it.
        if surface.contains(' ') {
            lexicon.push((surface.clone(), "n"));
        }
        surfaces.push(surface);
        surface_topics.push(topic);
    }

    // Per-topic context vocabulary from the remaining budget.
    let context_budget = config.vocab_size - FUNCTION_WORDS - VERBS - name_words;
    let per_topic = (context_budget / TOPICS).max(1);
    let mut context: Vec<Vec<String>> = Vec::with_capacity(TOPICS);
    for topic in 0..TOPICS {
        let words: Vec<String> = (0..per_topic).map(|_| factory.next(rng)).collect();
        for w in &words {
            word_topics.push((w.clone(), topic));
            lexicon.push((w.clone(), "n"));
        }
        context.push(words);
    }

    // Entities: every surface owns one, the first `n_ambiguous` own a
    // second from a different topic.
    let mut entities = Vec::with_capacity(config.n_entities);
    let mut entity_topics = Vec::with_capacity(config.n_entities);
    let make_entity = |surface: &str,
                           topic: usize,
                           rng: &mut ChaCha8Rng,
                           factory: &mut WordFactory,
                           word_topics: &mut Vec<(String, usize)>,
                           lexicon: &mut Vec<(String, &'static str)>,
                           entities: &mut Vec<KgEntity>,
                           entity_topics: &mut Vec<usize>|
     -> usize {
        let id = format!("E{:04}", entities.len());
        let alias = if entities.len() % 10 < 3 {
            let w = factory.next(rng);
            word_topics.push((w.clone(), topic));
            lexicon.push((w.clone(), "n"));
            vec![w]
        } else {
            Vec::new()
        };
        let ctx = &context[topic];
        let desc: Vec<String> = (0..5).map(|_| ctx[rng.gen_range(0..ctx.len())].clone()).collect();
        let mut attributes = BTreeMap::new();
        attributes.insert("category".to_string(), ctx[0].clone());
        attributes.insert("desc".to_string(), desc.join(" "));
        let popularity = 10f64.powf(rng.gen_range(0.0..6.0)).floor().max(1.0) as u64;
        entities.push(KgEntity {
            id,
            name: surface.to_string(),
            aliases: alias,
            attributes,
            popularity,
        });
        entity_topics.push(topic);
        entities.len() - 1
    };

    for (i, surface) in surfaces.iter().enumerate() {
        make_entity(
            surface,
            surface_topics[i],
            rng,
            &mut factory,
            &mut word_topics,
            &mut lexicon,
            &mut entities,
            &mut entity_topics,
        );
    }
    for i in 0..n_ambiguous {
        let surface_idx = i % n_surfaces;
        let other_topic = (surface_topics[surface_idx] + 2) % TOPICS;
        make_entity(
            &surfaces[surface_idx].clone(),
            other_topic,
            rng,
            &mut factory,
            &mut word_topics,
            &mut lexicon,
            &mut entities,
            &mut entity_topics,
        );
    }

    Ok(World {
        entities,
        entity_topics,
        surfaces,
        context,
        verbs,
        function_words,
        lexicon,
        word_topics,
    })
}

struct QuestionDraft {
    words: Vec<String>,
    mentions: Vec<(usize, usize, String, String)>, // word-range is implicit; store char span later
}

/// Assemble one question as a word list; mention spans are tracked as
/// word-index ranges and converted to character offsets afterwards.
fn build_question(world: &World, rng: &mut ChaCha8Rng) -> QuestionDraft {
    let n_mentions = match rng.gen_range(0..100) {
        0..=44 => 1,
        45..=79 => 2,
        _ => 3,
    };
    // Skewed entity choice so the tail is rare; mentions of one question
    // use distinct surfaces.
    let want = n_mentions.min(world.surfaces.len()).max(1);
    let mut chosen: Vec<usize> = Vec::new();
    let mut attempts = 0;
    while chosen.len() < want && attempts < 200 {
        attempts += 1;
        let u: f64 = rng.gen_range(0.0..1.0);
        let idx = ((u * u) * world.entities.len() as f64).floor() as usize;
        let idx = idx.min(world.entities.len() - 1);
        let surface = &world.entities[idx].name;
        if !chosen.iter().any(|&c| world.entities[c].name == *surface) {
            chosen.push(idx);
        }
    }

    let fw = &world.function_words;
    let mut words: Vec<String> = Vec::new();
    let mut mention_ranges: Vec<(usize, usize, usize)> = Vec::new(); // word start/end, entity idx
    words.push(fw[rng.gen_range(0..3)].clone());

    let hard_mention = rng.gen_range(0..100) < 25 && n_mentions > 0;
    for (k, &entity_idx) in chosen.iter().enumerate() {
        let is_hard = hard_mention && k + 1 == chosen.len();
        let topic = world.entity_topics[entity_idx];
        if is_hard {
            // No trigger: bury the mention between context words.
            let ctx = &world.context[topic];
            words.push(ctx[rng.gen_range(0..ctx.len())].clone());
        } else {
            words.push(world.verbs[rng.gen_range(0..world.verbs.len())].clone());
        }
        let start = words.len();
        for w in world.entities[entity_idx].name.split(' ') {
            words.push(w.to_string());
        }
        mention_ranges.push((start, words.len(), entity_idx));
        if rng.gen_range(0..100) < 70 {
            words.push(fw[3].clone());
        }
    }

    // Context words drawn from a gold entity's topic (the EL signal).
    let anchor = chosen[rng.gen_range(0..chosen.len())];
    let topic = world.entity_topics[anchor];
    let ctx = &world.context[topic];
    for _ in 0..rng.gen_range(2..=4) {
        words.push(ctx[rng.gen_range(0..ctx.len())].clone());
    }

    // Distractors: entity surfaces in a non-mention slot, always after
    // the dedicated marker word.
    let mut n_distractors = 0;
    let roll = rng.gen_range(0..100);
    if roll < 60 {
        n_distractors += 1;
    }
    if roll < 20 {
        n_distractors += 1;
    }
    for _ in 0..n_distractors {
        for _ in 0..20 {
            let surface = &world.surfaces[rng.gen_range(0..world.surfaces.len())];
            let clash = chosen.iter().any(|&c| world.entities[c].name == *surface);
            if !clash {
                words.push(fw[4].clone());
                for w in surface.split(' ') {
                    words.push(w.to_string());
                }
                break;
            }
        }
    }

    words.push(fw[7 + rng.gen_range(0..3)].clone());

    // Word ranges → character offsets (words joined by single spaces).
    let mut char_starts = Vec::with_capacity(words.len());
    let mut pos = 0;
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            pos += 1;
        }
        char_starts.push(pos);
        pos += char_len(w);
    }
    let mentions = mention_ranges
        .into_iter()
        .map(|(ws, we, entity_idx)| {
            let start = char_starts[ws];
            let end = char_starts[we - 1] + char_len(&words[we - 1]);
            let surface = world.entities[entity_idx].name.clone();
            (start, end, surface, world.entities[entity_idx].id.clone())
        })
        .collect();
    QuestionDraft { words, mentions }
}

/// Generate the complete file set under `out_dir` (created if missing).
pub fn generate_fixture(config: &FixtureConfig, out_dir: &Path) -> Result<FixtureFiles> {
    validate(config)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = FixtureFiles::in_dir(out_dir);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let world = build_world(config, &mut rng)?;

    // Questions.
    let mut questions = Vec::with_capacity(config.n_questions);
    for qi in 0..config.n_questions {
        let draft = build_question(&world, &mut rng);
        let text = draft.words.join(" ");
        let entities = draft
            .mentions
            .into_iter()
            .map(|(start, end, mention, kb_id)| GoldMention {
                start,
                end,
                mention,
                kb_id,
            })
            .collect();
        questions.push(Question {
            id: format!("q{qi:04}"),
            text,
            entities,
        });
    }

    // Corpus: one doc per entity tying its name to its topic vocabulary,
    // plus a few pure topic docs.
    let mut corpus_lines: Vec<String> = Vec::new();
    for (e, &topic) in world.entities.iter().zip(&world.entity_topics) {
        let ctx = &world.context[topic];
        let mut doc: Vec<String> = Vec::new();
        doc.push(world.function_words[rng.gen_range(0..FUNCTION_WORDS)].clone());
        doc.extend(e.name.split(' ').map(str::to_string));
        doc.push(e.attributes["category"].clone());
        doc.extend(e.attributes["desc"].split(' ').map(str::to_string));
        doc.push(ctx[rng.gen_range(0..ctx.len())].clone());
        corpus_lines.push(doc.join(" "));
    }
    for topic in 0..TOPICS {
        let ctx = &world.context[topic];
        for _ in 0..3 {
            let mut doc: Vec<String> = (0..6)
                .map(|_| ctx[rng.gen_range(0..ctx.len())].clone())
                .collect();
            doc.push(world.verbs[rng.gen_range(0..VERBS)].clone());
            corpus_lines.push(doc.join(" "));
        }
    }

    // Embeddings: one hot topic coordinate plus uniform noise, normalized.
    // The noise amplitude keeps same-topic cosines above 0.8 and
    // cross-topic ones below 0.2 in the worst case.
    let dim = config.embedding_dim;
    let mut embedding_lines = vec![format!("{} {}", world.word_topics.len(), dim)];
    for (word, topic) in &world.word_topics {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.03..0.03)).collect();
        v[*topic] += 1.0;
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rendered: Vec<String> = v.iter().map(|x| format!("{:.6}", x / norm)).collect();
        embedding_lines.push(format!("{word} {}", rendered.join(" ")));
    }

    // Validation pass before anything is written.
    let store = KgStore::from_entities(world.entities.clone())?;
    for q in &questions {
        q.validate()?;
        for g in &q.entities {
            if !store.lookup_surface(&g.mention).contains(&g.kb_id) {
                return Err(Error::invalid(format!(
                    "generated question {:?}: {:?} does not resolve to {}",
                    q.id, g.mention, g.kb_id
                )));
            }
        }
    }

    // Emit.
    let mut kg_out = String::new();
    for e in &world.entities {
        kg_out.push_str(&serde_json::to_string(e).map_err(|err| Error::Model(err.to_string()))?);
        kg_out.push('\n');
    }
    fs::write(&files.kg, kg_out).map_err(|e| Error::io(&files.kg, e))?;

    let mut lex_out = String::new();
    for (term, pos) in &world.lexicon {
        lex_out.push_str(&format!("{term}\t{pos}\n"));
    }
    fs::write(&files.lexicon, lex_out).map_err(|e| Error::io(&files.lexicon, e))?;

    let stop_out: String = world
        .function_words
        .iter()
        .map(|w| format!("{w}\n"))
        .collect();
    fs::write(&files.stopwords, stop_out).map_err(|e| Error::io(&files.stopwords, e))?;

    fs::write(&files.embeddings, embedding_lines.join("\n") + "\n")
        .map_err(|e| Error::io(&files.embeddings, e))?;
    fs::write(&files.corpus, corpus_lines.join("\n") + "\n")
        .map_err(|e| Error::io(&files.corpus, e))?;

    let mut q_out = String::new();
    for q in &questions {
        q_out.push_str(&serde_json::to_string(q).map_err(|err| Error::Model(err.to_string()))?);
        q_out.push('\n');
    }
    fs::write(&files.questions, q_out).map_err(|e| Error::io(&files.questions, e))?;

    Ok(files)
}
