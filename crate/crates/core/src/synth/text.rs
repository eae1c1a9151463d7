//! Vocabulary for synthetic exercises and help requests.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::analytics::Category;

pub(crate) const EXERCISES: [&str; 10] = [
    "Write a function called average that takes a list of numbers and returns their mean. \
If the list is empty, the function should return None instead of raising an error. Test your \
function on at least three lists, including an empty one, and print each result.",
    "Write a program that asks the user for a positive integer n and prints the first n rows of \
a multiplication table. Each row should contain n values separated by a single space. If the \
user enters something that is not a positive integer, print an error message and ask again.",
    "Create a class named BankAccount with a balance attribute that starts at zero. Add deposit \
and withdraw methods. A withdrawal that would make the balance negative must be refused with a \
message, and the balance must stay unchanged. Finally add a method that prints the balance.",
    "Read a text file called words.txt and count how many times each word appears, ignoring \
upper and lower case. Print the ten most common words together with their counts, one per \
line, in decreasing order of frequency. Punctuation at the start or end of a word is removed.",
    "Write a recursive function that computes the nth Fibonacci number. Then write a second \
version that uses a loop instead of recursion. Compare how long each version takes for n equal \
to 30 and write a short comment in your code explaining the difference you observe.",
    "Given a list of student records, where each record is a dictionary with a name and a grade, \
sort the records by grade from highest to lowest. Students with the same grade should appear in \
alphabetical order by name. Print the sorted list as a neatly aligned table with two columns.",
    "Write a function is_palindrome that returns True when a string reads the same forwards and \
backwards and False otherwise. Spaces, punctuation and letter case should be ignored, so that \
the phrase A man, a plan, a canal: Panama counts as a palindrome. Do not use slicing tricks.",
    "Implement a simple guessing game. The computer picks a random number between 1 and 100 and \
the player keeps guessing until they find it. After each guess print whether the guess was too \
high or too low. When the game ends, print how many guesses the player needed in total.",
    "Write a program that converts temperatures between Celsius and Fahrenheit. The user enters \
a number followed by the letter C or F. Print the converted value rounded to one decimal place. \
Invalid input such as a missing letter or a non-numeric value must produce a helpful message.",
    "Write a function that takes a two-dimensional list representing a matrix and returns its \
transpose. The function must work for matrices that are not square. Then write a second function \
that multiplies two matrices and raises a ValueError when their dimensions are incompatible.",
];

const LANGUAGES: [&str; 4] = ["Python", "Python", "Java", "C++"];

const NAMES: [&str; 16] = [
    "total", "count", "values", "items", "result", "nums", "scores", "data", "acc", "grid",
    "word", "text", "balance", "guess", "row", "temp",
];
const FUNCS: [&str; 10] = [
    "average", "compute", "solve", "process", "check", "build_table", "count_words", "fib",
    "transpose", "convert",
];

const CODE_TEMPLATES: [&str; 6] = [
    "def {f}({a}):\n    {v} = 0\n    for i in range({n}):\n        {v} += {a}[i]\n    return {v} / {m}\n",
    "{v} = []\nwhile len({v}) < {n}:\n    {a} = input(\"value: \")\n    {v}.append(int({a}))\nprint({f}({v}))\n",
    "class {F}:\n    def __init__(self):\n        self.{v} = {n}\n\n    def {f}(self, {a}):\n        if {a} > self.{v}:\n            return False\n        self.{v} -= {a}\n",
    "for {a} in range(1, {n}):\n    {v} = {a} * {m}\n    if {v} % 2 == 0:\n        print({a}, {v})\n    else:\n        {f}({v})\n",
    "def {f}({a}, {v}):\n    if {a} == 0:\n        return {v}\n    return {f}({a} - {m}, {v} + {n})\n\nprint({f}({n}, 0))\n",
    "with open(\"{a}.txt\") as fh:\n    {v} = {{}}\n    for line in fh:\n        for w in line.split():\n            {v}[w] = {v}.get(w, {m}) + 1\nprint(sorted({v})[:{n}])\n",
];

const ERRORS: [&str; 8] = [
    "TypeError: unsupported operand type(s) for +=: 'int' and 'str'",
    "IndexError: list index out of range",
    "ZeroDivisionError: division by zero",
    "NameError: name '{v}' is not defined",
    "ValueError: invalid literal for int() with base 10: '{a}'",
    "RecursionError: maximum recursion depth exceeded in comparison",
    "KeyError: '{a}'",
    "AttributeError: 'NoneType' object has no attribute 'append'",
];

const THINGS: [&str; 8] = [
    "loop", "function", "while loop", "class", "program", "recursion", "if statement", "list",
];

const DEBUG_ERROR: [&str; 5] = [
    "Why am I getting this error when I run my {t}?",
    "What does this error mean and how do I get rid of it?",
    "I keep getting an error on line {k}, what is wrong with my {t}?",
    "Can you explain why this error shows up after I added the {t}?",
    "The error appears every time I call {f}. Why?",
];
const DEBUG_OUTCOME: [&str; 5] = [
    "My {t} should print {x} but it prints {y} instead.",
    "Why does {f} return {y} when I expect {x}?",
    "The output is {y} but the answer should be {x}, why doesn't my {t} work?",
    "I expected the {t} to stop after {x} rounds but it keeps going.",
    "Why isn't {f} giving me {x} for this input?",
];
const DEBUG_BOTH: [&str; 4] = [
    "I get this error but I want it to print {x}, what is wrong?",
    "It crashes with the error above instead of returning {x}. Why?",
    "The {t} should give {x} but I get this error instead.",
    "Why do I get an error when {f} is supposed to output {x}?",
];
const IMPLEMENTATION: [&str; 6] = [
    "How do I make my {t} stop when the user types quit?",
    "How can I get {f} to handle negative numbers too?",
    "How do I print the results with {k} values per line?",
    "How do I store the {n} in a dictionary instead of a list?",
    "How would I add a counter to my {t} for the number of tries?",
    "How do I get it to round to {k} decimal places?",
];
const UNDERSTANDING: [&str; 5] = [
    "What is the difference between a {t} and a {u}?",
    "What does the return keyword actually do in {f}?",
    "Why do we need self in a class method?",
    "When should I use a {t} instead of a {u}?",
    "What is the point of range starting at zero?",
];
const NOTHING_SHORT: [&str; 7] = ["", "help", "fix this", "??", "help pls", "stuck", "idk"];
const NOTHING_LONG: [&str; 3] = [
    "Here is my code for exercise {k}.",
    "this is what I have so far for the {t}",
    "My code for the {t} question.",
];
const ERROR_SHORT: [&str; 3] = ["error", "why error", "what?"];
const OFF_TOPIC: [&str; 3] = [
    "What is a good movie to watch this weekend?",
    "Can you write me a poem about autumn leaves?",
    "Who won the football game last night?",
];

fn fill<R: Rng>(rng: &mut R, template: &str) -> String {
    let pick = |rng: &mut R, xs: &[&str]| xs.choose(rng).copied().unwrap_or_default().to_owned();
    let mut s = template.to_owned();
    let subs: [(&str, String); 11] = [
        ("{f}", pick(rng, &FUNCS)),
        ("{F}", pick(rng, &["Account", "Game", "Matrix", "Counter", "Student"])),
        ("{a}", pick(rng, &NAMES)),
        ("{v}", pick(rng, &NAMES)),
        ("{n}", rng.random_range(3..60).to_string()),
        ("{m}", rng.random_range(1..9).to_string()),
        ("{k}", rng.random_range(2..40).to_string()),
        ("{x}", rng.random_range(0..500).to_string()),
        ("{y}", rng.random_range(0..500).to_string()),
        ("{t}", pick(rng, &THINGS)),
        ("{u}", pick(rng, &THINGS)),
    ];
    for (k, v) in subs {
        s = s.replace(k, &v);
    }
    s
}

pub(crate) struct Draft {
    pub language: String,
    pub code: String,
    pub error: String,
    pub issue: String,
}

/// What kind of issue text to write for a kept query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IssueKind {
    Normal,
    Short,
    Copied(usize),
}

pub(crate) fn draft<R: Rng>(rng: &mut R, category: Category, kind: IssueKind) -> Draft {
    let language = LANGUAGES.choose(rng).copied().unwrap_or("Python").to_owned();
    let template = *CODE_TEMPLATES.choose(rng).expect("templates");
    let code = fill(rng, template);
    let with_error = matches!(
        category,
        Category::DebuggingErrorOnly | Category::DebuggingErrorAndOutcome
    );
    let error = if with_error {
        let template = *ERRORS.choose(rng).expect("errors");
        fill(rng, template)
    } else {
        String::new()
    };
    let issue = match kind {
        IssueKind::Copied(ex) => {
            let text = EXERCISES[ex];
            if rng.random_bool(0.5) {
                format!("How do I {text}")
            } else {
                text.to_owned()
            }
        }
        IssueKind::Short => {
            let pool: &[&str] = if with_error { &ERROR_SHORT } else { &NOTHING_SHORT };
            pool.choose(rng).copied().unwrap_or_default().to_owned()
        }
        IssueKind::Normal => {
            let pool: &[&str] = match category {
                Category::DebuggingErrorOnly => &DEBUG_ERROR,
                Category::DebuggingOutcomeOnly => &DEBUG_OUTCOME,
                Category::DebuggingErrorAndOutcome => &DEBUG_BOTH,
                Category::Implementation => &IMPLEMENTATION,
                Category::Understanding => &UNDERSTANDING,
                Category::Nothing => &NOTHING_LONG,
                Category::OffTopic => &OFF_TOPIC,
            };
            let template = *pool.choose(rng).expect("issue templates");
            fill(rng, template)
        }
    };
    Draft {
        language,
        code,
        error,
        issue,
    }
}

/// A resubmission: the same request with a few characters of code changed.
pub(crate) fn small_edit<R: Rng>(rng: &mut R, code: &str, edits: usize) -> String {
    let mut chars: Vec<char> = code.chars().collect();
    for _ in 0..edits {
        let pos = rng.random_range(0..=chars.len());
        match rng.random_range(0..3) {
            0 if pos < chars.len() => {
                chars.remove(pos);
            }
            1 if pos < chars.len() => chars[pos] = if chars[pos] == ' ' { '_' } else { ' ' },
            _ => chars.insert(pos, ' '),
        }
    }
    chars.into_iter().collect()
}
