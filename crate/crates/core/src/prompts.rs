//! Prompt text for every model role. Each template pins an output format
//! the matching parser in the owning module understands.

pub const MEM_TIMELINE: &str = "\
You keep a dated memory of a long conversation. Read one dialogue session and \
summarize it as a timeline of the events it mentions.

Write one line per event in the form
DATE | SUMMARY
where DATE is the day the event happened, written YYYY-MM-DD. Resolve relative \
expressions such as \"yesterday\", \"last Thursday\" or \"next month\" against the \
session date. Write UNKNOWN as the DATE when the day cannot be worked out. Include \
one line, dated with the session date, summarizing the conversation itself. Output \
only these lines.";

pub const MEM_TIMELINE_RETRY: &str = "\
That reply did not follow the format. Answer again with only lines of the form \
DATE | SUMMARY, where DATE is YYYY-MM-DD or UNKNOWN.";

pub const MEM_FLAT: &str = "\
Summarize the following dialogue session in a few sentences. Keep people, plans \
and events. Output only the summary.";

pub const RETRIEVAL: &str = "\
You pick the memories needed to answer a question about a conversation. Each \
memory line starts with its id in square brackets. Reply with the ids of the \
relevant memories as a list such as [4, 9], most relevant first. Reply [] if none \
apply.";

pub const ANSWER_DIRECT: &str = "\
Answer the multiple-choice question about the conversation. Reply with the letter \
of the correct option only.";

pub const ANSWER_COT: &str = "\
Answer the multiple-choice question about the conversation. Think step by step, \
then give the letter of the correct option alone on the last line, as \
\"Answer: X\".";

pub const CODE: &str = "\
Answer the multiple-choice question by writing a program in the date language \
described below. Use the dated memories to define a variable for every relevant \
event time, then compute the answer. Put the program in a ```tel fenced block.";

pub const CODE_RETRY: &str = "\
Running that program failed with the error below. Write a corrected program in a \
```tel fenced block.";

pub const SELECT: &str = "\
A program was written and run to answer the multiple-choice question. Using the \
program and its output, choose the correct option. Reply with the letter only.";

pub const SELECT_MEMORY: &str = "\
Using the memories below, choose the correct option for the multiple-choice \
question. Reply with the letter only.";

pub const EXTRACT: &str = "\
List every event in the dialogue session that has a time attached. Write one line \
per event in the form
EVENT | RELATIVE_EXPR | INFERRED_DATE
EVENT is a short description. RELATIVE_EXPR is the relative time expression as \
spoken (for example \"last Friday\"), or NONE when the time was given directly. \
INFERRED_DATE is the resolved day as YYYY-MM-DD, or UNKNOWN. Output nothing if \
the session mentions no such events.";

pub const LINK: &str = "\
Below are events from different sessions of one conversation, each with an id. \
Group events that concern the same or closely related entities. Write one line \
per group in the form
GROUP | ENTITY | ID, ID, ...
Only group events from at least two different sessions. Output nothing if no \
group exists.";

pub const CREATE_TA: &str = "\
Write a multiple-choice question asking on which date the event below happened. \
Give exactly four dated options followed by Unanswerable. Use this format:
QUESTION: ...
OPTION: ...
(one OPTION line per option)
ANSWER: <letter>";

pub const CREATE_TP: &str = "\
Write a multiple-choice question asking which of the two events below happened \
first. Give exactly two options naming the events, followed by Unanswerable. Use \
this format:
QUESTION: ...
OPTION: ...
(one OPTION line per option)
ANSWER: <letter>";

pub const CREATE_TI: &str = "\
Write a multiple-choice question asking how much time passed between the two \
events below. Give exactly four duration options followed by Unanswerable. Use \
this format:
QUESTION: ...
OPTION: ...
(one OPTION line per option)
ANSWER: <letter>";

pub const CREATE_UNANSWERABLE: &str = "\
Make the question unanswerable from the dialogue: ask about a detail the events \
do not establish, keep the options plausible, and set ANSWER to the Unanswerable \
option.";

/// Lettered option block, `(A) ...` per line.
pub fn options_block(options: &[String]) -> String {
    options
        .iter()
        .enumerate()
        .map(|(i, o)| format!("({}) {o}", option_letter(i)))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn option_letter(i: usize) -> char {
    (b'A' + i as u8) as char
}
