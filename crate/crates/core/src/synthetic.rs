//! Deterministic synthetic corpus of two fact-checking accounts.
//!
//! Posts mimic the shape of debunk tweets (agency boilerplate, links,
//! hashtags, retweets, short threads) and are drawn from a fixed schedule
//! of topics per fortnight. `Leisure` (carnival) is only scheduled in the
//! fourth fortnight, for both accounts.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::community::{top_communities, Partition};
use crate::corpus::{sort_posts, Post};
use crate::trends::LabelRow;

pub const SEED: u64 = 20_200_101;
pub const SOURCES: [(&str, usize); 2] = [("aosfatos", 2600), ("agencialupa", 2515)];
pub const TOTAL_POSTS: usize = 2600 + 2515;

/// Topic codes and the vocabulary planted for each.
pub const TOPICS: &[(&str, &[&str])] = &[
    (
        "Leisure",
        &[
            "carnaval",
            "folia",
            "bloco",
            "fantasia",
            "glitter",
            "desfile",
            "samba",
            "sambódromo",
            "marchinha",
            "confete",
            "serpentina",
            "trio",
            "elétrico",
            "foliões",
            "abadá",
            "ressaca",
            "festa",
            "olinda",
            "salvador",
            "avenida",
            "bateria",
            "passista",
            "cordão",
            "purpurina",
        ],
    ),
    (
        "Economy",
        &[
            "imposto",
            "icms",
            "ipva",
            "iptu",
            "combustível",
            "gasolina",
            "etanol",
            "preço",
            "petrobras",
            "bomba",
            "posto",
            "alíquota",
            "arrecadação",
            "tributo",
            "diesel",
            "litro",
            "reajuste",
            "inflação",
            "pib",
            "crescimento",
            "gás",
            "botijão",
        ],
    ),
    (
        "Federal Government",
        &[
            "jair",
            "bolsonaro",
            "presidente",
            "planalto",
            "decreto",
            "governo",
            "federal",
            "provisória",
            "palácio",
            "veto",
            "discurso",
            "declaração",
            "aliados",
            "paulo",
            "guedes",
            "ministério",
            "gabinete",
            "exonerado",
            "nomeação",
            "secretário",
        ],
    ),
    (
        "Prevention - COVID19",
        &[
            "álcool",
            "gel",
            "lavar",
            "mãos",
            "máscara",
            "vitamina",
            "limão",
            "chá",
            "erva-doce",
            "gargarejo",
            "vinagre",
            "bicarbonato",
            "imunidade",
            "prevenção",
            "caseira",
            "alho",
            "gengibre",
            "laranja",
            "garganta",
            "quente",
            "vacina",
            "sinovac",
        ],
    ),
    (
        "Dissemination - COVID19",
        &[
            "vírus",
            "pandemia",
            "china",
            "wuhan",
            "contágio",
            "transmissão",
            "casos",
            "isolamento",
            "quarentena",
            "sintomas",
            "morcego",
            "laboratório",
            "mercado",
            "infectados",
            "surto",
            "epidemia",
            "aglomeração",
            "distanciamento",
            "assintomáticos",
            "curva",
        ],
    ),
    (
        "Transparency - COVID19",
        &[
            "dados",
            "mortes",
            "óbitos",
            "cartórios",
            "registro",
            "civil",
            "subnotificação",
            "números",
            "boletim",
            "portal",
            "transparência",
            "certidão",
            "estatísticas",
            "balanço",
            "caixões",
            "enterros",
            "cemitério",
            "covas",
            "vazios",
            "pedras",
        ],
    ),
    (
        "Treatment - COVID19",
        &[
            "hidroxicloroquina",
            "cloroquina",
            "ivermectina",
            "tratamento",
            "remédio",
            "eficácia",
            "estudo",
            "pacientes",
            "azitromicina",
            "protocolo",
            "medicamento",
            "dose",
            "cura",
            "clínico",
            "ensaio",
            "comprovada",
            "científica",
            "pesquisadores",
        ],
    ),
    (
        "Politics",
        &[
            "deputado",
            "senador",
            "câmara",
            "congresso",
            "eleição",
            "partido",
            "lula",
            "pt",
            "stf",
            "supremo",
            "impeachment",
            "votação",
            "plenário",
            "prefeito",
            "vereador",
            "oposição",
            "dilma",
            "temer",
            "assembleia",
            "governadores",
        ],
    ),
    (
        "International Affairs",
        &[
            "irã",
            "eua",
            "donald",
            "trump",
            "soleimani",
            "ataque",
            "míssil",
            "guerra",
            "embaixada",
            "iraque",
            "diplomacia",
            "sanções",
            "israel",
            "cuba",
            "suécia",
            "fronteira",
            "tropas",
            "bombardeio",
        ],
    ),
    (
        "Environment",
        &[
            "austrália",
            "incêndio",
            "queimadas",
            "coalas",
            "floresta",
            "amazônia",
            "desmatamento",
            "bombeiros",
            "chamas",
            "hectares",
            "fumaça",
            "seca",
            "chuvas",
            "enchente",
            "barragem",
            "brumadinho",
            "lama",
        ],
    ),
    (
        "Media",
        &[
            "jornalista",
            "globo",
            "cnn",
            "reportagem",
            "imprensa",
            "entrevista",
            "jornal",
            "emissora",
            "repórter",
            "apresentador",
            "montagem",
            "edição",
            "manchete",
            "folha",
            "censura",
            "mídia",
            "emissoras",
            "programa",
        ],
    ),
    (
        "Hospital - COVID19",
        &[
            "hospital",
            "uti",
            "leitos",
            "respiradores",
            "ocupação",
            "enfermeiros",
            "fila",
            "atendimento",
            "pronto-socorro",
            "hospitais",
            "campanha",
            "internados",
            "macas",
            "intubados",
            "lotado",
            "corredor",
        ],
    ),
];

const GENERIC: &[&str] = &[
    "brasil",
    "post",
    "redes",
    "sociais",
    "mensagem",
    "circula",
    "whatsapp",
    "facebook",
    "publicação",
    "boato",
    "informação",
    "falsa",
    "enganoso",
    "verdade",
    "checagem",
    "compartilhada",
    "usuários",
    "texto",
    "imagem",
    "afirmação",
    "alegação",
    "conteúdo",
    "viral",
    "internet",
    "corrente",
    "áudio",
    "vídeo",
    "foto",
];

const FILLERS: &[&str] = &[
    "de", "que", "o", "a", "em", "com", "para", "não", "do", "da", "os", "um", "uma", "por", "se",
    "no", "na", "mais", "como", "é",
];

const SYLLABLES: &[&str] = &[
    "ba", "ca", "da", "fe", "ga", "li", "mo", "nu", "pa", "ra", "si", "ti", "vo", "zu", "lha",
    "nho", "gui", "tra", "bre", "cla", "for", "men", "sor", "quin",
];

const HASHTAGS: &[&str] = &[
    "CoronaVirusFacts",
    "Checagem",
    "FakeNews",
    "Verificamos",
    "Lupa",
];
const HANDLES: &[&str] = &[
    "usuario",
    "jornal_x",
    "perfil_oficial",
    "leitor123",
    "canal_news",
];

/// Topic weights per fortnight (1-based index = position + 1) and source.
/// Each entry is `(topic, [weights for windows 1..=15])`.
type Schedule = [(&'static str, [u8; 15]); 12];

const SCHEDULE_A: Schedule = [
    ("Leisure", [0, 0, 0, 9, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
    ("Economy", [1, 2, 3, 7, 2, 4, 1, 2, 5, 2, 1, 3, 2, 1, 2]),
    (
        "Federal Government",
        [6, 4, 5, 2, 3, 2, 4, 6, 3, 5, 3, 6, 4, 5, 3],
    ),
    (
        "Prevention - COVID19",
        [0, 0, 3, 2, 6, 3, 2, 1, 2, 3, 5, 2, 3, 4, 2],
    ),
    (
        "Dissemination - COVID19",
        [0, 0, 4, 1, 5, 3, 3, 8, 2, 9, 7, 9, 6, 5, 6],
    ),
    (
        "Transparency - COVID19",
        [0, 0, 2, 0, 1, 9, 6, 4, 8, 2, 4, 2, 3, 2, 3],
    ),
    (
        "Treatment - COVID19",
        [0, 0, 0, 0, 1, 2, 4, 2, 1, 3, 2, 5, 4, 3, 2],
    ),
    ("Politics", [2, 7, 1, 3, 1, 5, 3, 2, 1, 2, 1, 3, 2, 4, 1]),
    (
        "International Affairs",
        [7, 2, 1, 0, 1, 2, 1, 0, 1, 0, 2, 3, 1, 0, 1],
    ),
    ("Environment", [4, 5, 1, 1, 0, 0, 1, 0, 1, 0, 0, 1, 2, 1, 0]),
    ("Media", [1, 2, 2, 5, 1, 1, 2, 1, 4, 1, 2, 1, 1, 2, 1]),
    (
        "Hospital - COVID19",
        [0, 0, 0, 0, 1, 2, 4, 3, 5, 2, 3, 2, 2, 3, 2],
    ),
];

const SCHEDULE_B: Schedule = [
    ("Leisure", [0, 0, 0, 8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
    ("Economy", [2, 1, 2, 9, 3, 2, 3, 1, 2, 4, 2, 1, 3, 2, 1]),
    (
        "Federal Government",
        [8, 5, 2, 3, 2, 4, 3, 5, 6, 3, 4, 3, 5, 3, 4],
    ),
    (
        "Prevention - COVID19",
        [0, 5, 2, 3, 4, 2, 3, 2, 1, 4, 3, 2, 2, 3, 1],
    ),
    (
        "Dissemination - COVID19",
        [0, 4, 1, 1, 8, 6, 5, 3, 4, 5, 3, 6, 7, 4, 5],
    ),
    (
        "Transparency - COVID19",
        [2, 3, 1, 0, 2, 3, 2, 6, 3, 3, 5, 4, 2, 3, 2],
    ),
    (
        "Treatment - COVID19",
        [0, 0, 0, 0, 0, 1, 2, 3, 4, 2, 5, 3, 2, 4, 3],
    ),
    ("Politics", [3, 1, 4, 2, 2, 5, 2, 3, 2, 1, 3, 2, 4, 2, 3]),
    (
        "International Affairs",
        [6, 1, 3, 1, 0, 1, 0, 1, 2, 1, 1, 0, 1, 2, 1],
    ),
    ("Environment", [1, 2, 5, 0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 1]),
    ("Media", [2, 4, 7, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 1, 2]),
    (
        "Hospital - COVID19",
        [0, 0, 0, 0, 0, 1, 3, 2, 3, 4, 2, 3, 4, 2, 3],
    ),
];

fn vocabulary(topic: &str) -> &'static [&'static str] {
    TOPICS
        .iter()
        .find(|(code, _)| *code == topic)
        .map(|(_, words)| *words)
        .expect("scheduled topic has a vocabulary")
}

fn start() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
}

/// Generates the full corpus; identical for identical seeds.
pub fn generate(seed: u64) -> Vec<Post> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let long_tail = long_tail(&mut rng, 3000);
    let mut posts = Vec::with_capacity(TOTAL_POSTS);
    for (source, count) in SOURCES {
        let schedule = if source == SOURCES[0].0 {
            &SCHEDULE_A
        } else {
            &SCHEDULE_B
        };
        posts.extend(generate_source(
            &mut rng, source, count, schedule, &long_tail,
        ));
    }
    sort_posts(&mut posts);
    posts
}

fn long_tail(rng: &mut ChaCha8Rng, size: usize) -> Vec<String> {
    let mut words = std::collections::BTreeSet::new();
    while words.len() < size {
        let syllables = rng.random_range(2..=4);
        let word: String = (0..syllables)
            .map(|_| *SYLLABLES.choose(rng).unwrap())
            .collect();
        words.insert(word);
    }
    let mut words: Vec<String> = words.into_iter().collect();
    // Shuffle so the Zipf head is not alphabetical.
    for i in (1..words.len()).rev() {
        let j = rng.random_range(0..=i);
        words.swap(i, j);
    }
    words
}

fn zipf(len: usize, exponent: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((0..len).map(|r| 1.0 / ((r + 1) as f64).powf(exponent))).unwrap()
}

fn generate_source(
    rng: &mut ChaCha8Rng,
    source: &str,
    count: usize,
    schedule: &Schedule,
    long_tail: &[String],
) -> Vec<Post> {
    let span_seconds = (Utc.with_ymd_and_hms(2020, 8, 1, 0, 0, 0).unwrap() - start()).num_seconds();
    let tail_dist = zipf(long_tail.len(), 1.0);
    let generic_dist = zipf(GENERIC.len(), 0.7);

    // Thread heads first, then members trailing each head.
    let mut heads: Vec<i64> = Vec::new();
    let mut members: Vec<(i64, usize)> = Vec::new();
    while members.len() < count {
        let head = rng.random_range(0..span_seconds - 600);
        heads.push(head);
        let length = if rng.random_bool(0.15) {
            rng.random_range(2..=4)
        } else {
            1
        };
        let thread = heads.len() - 1;
        let mut at = head;
        for _ in 0..length {
            if members.len() == count {
                break;
            }
            members.push((at, thread));
            at += rng.random_range(20..=110);
        }
    }

    let topics: Vec<&str> = heads
        .iter()
        .map(|&t| {
            let window = ((t / 86_400) / 15) as usize;
            let weights: Vec<u32> = schedule.iter().map(|(_, w)| u32::from(w[window])).collect();
            let pick = WeightedIndex::new(&weights).expect("every window schedules a topic");
            schedule[pick.sample(rng)].0
        })
        .collect();

    members.sort();
    members
        .into_iter()
        .enumerate()
        .map(|(seq, (at, thread))| {
            let topic = topics[thread];
            Post {
                id: format!("{source}-{:05}", seq + 1),
                source: source.to_string(),
                created_at: start() + Duration::seconds(at),
                text: compose(
                    rng,
                    source,
                    vocabulary(topic),
                    long_tail,
                    &tail_dist,
                    &generic_dist,
                ),
            }
        })
        .collect()
}

fn compose(
    rng: &mut ChaCha8Rng,
    source: &str,
    vocab: &[&str],
    long_tail: &[String],
    tail_dist: &WeightedIndex<f64>,
    generic_dist: &WeightedIndex<f64>,
) -> String {
    let topic_dist = zipf(vocab.len(), 0.6);
    let mut parts: Vec<String> = Vec::new();
    if rng.random_bool(0.05) {
        parts.push(format!("RT @{}:", HANDLES.choose(rng).unwrap()));
    }
    if rng.random_bool(0.08) {
        parts.push("NO AR.".into());
    } else if rng.random_bool(0.08) {
        parts.push("É falso que".into());
    }
    let words = rng.random_range(6..=12);
    for i in 0..words {
        if i > 0 && rng.random_bool(0.35) {
            parts.push(FILLERS.choose(rng).unwrap().to_string());
        }
        let roll: f64 = rng.random();
        let mut word = if roll < 0.72 {
            vocab[topic_dist.sample(rng)].to_string()
        } else if roll < 0.85 {
            GENERIC[generic_dist.sample(rng)].to_string()
        } else {
            long_tail[tail_dist.sample(rng)].clone()
        };
        if i == 0 || rng.random_bool(0.05) {
            word = capitalize(&word);
        }
        if rng.random_bool(0.06) {
            word.push(',');
        }
        parts.push(word);
    }
    if let Some(last) = parts.last_mut() {
        last.push('.');
    }
    if rng.random_bool(0.1) {
        parts.push(format!("@{}", HANDLES.choose(rng).unwrap()));
    }
    if rng.random_bool(0.7) {
        parts.push(format!(
            "https://www.{source}.org/noticias/{}/",
            rng.random_range(1000..99999)
        ));
    }
    if rng.random_bool(0.3) {
        parts.push(format!("#{}", HASHTAGS.choose(rng).unwrap()));
    }
    parts.join(" ")
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Topic whose planted vocabulary contains `token`. Compound tokens
/// (`PAULO_GUEDES`) match on any of their parts.
pub fn planted_topic(token: &str) -> Option<&'static str> {
    let lower = token.to_lowercase();
    lower.split('_').find_map(|part| {
        TOPICS
            .iter()
            .find(|(_, words)| words.contains(&part))
            .map(|(code, _)| *code)
    })
}

/// Stand-in for manual labelling: each of the top `k` communities of every
/// partition gets the topic contributing most of its members. Communities
/// without planted words stay unlabelled.
pub fn label_partitions(partitions: &[Partition], k: usize) -> Vec<LabelRow> {
    let mut rows = Vec::new();
    for partition in partitions {
        for community in top_communities(partition, k, 0.0) {
            let mut counts = vec![0usize; TOPICS.len()];
            for token in &community.members {
                if let Some(code) = planted_topic(token) {
                    counts[TOPICS.iter().position(|(c, _)| *c == code).unwrap()] += 1;
                }
            }
            let best = counts
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)));
            if let Some((idx, &count)) = best {
                if count > 0 {
                    rows.push(LabelRow {
                        source: partition.source.clone(),
                        window_index: partition.window_index,
                        community_id: community.id,
                        code: TOPICS[idx].0.to_string(),
                    });
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        (&a.source, a.window_index, a.community_id).cmp(&(
            &b.source,
            b.window_index,
            b.community_id,
        ))
    });
    rows
}
