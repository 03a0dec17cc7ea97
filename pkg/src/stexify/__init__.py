"""stexify: disambiguating symbolic expressions in LaTeX documents into sTeX.

Submodules:
  latex      lossless LaTeX AST: parse / render / find_math
  registry   sTeX signature modules, macro expansion, stexcheck
  normalize  canonicalization of ASTs
  corpus     parallel dataset construction and serialization
  terms      typed terms and the subtype lattice
  synth      random well-typed term generation and verbalization
  semantics  sTeX <-> term conversion, type inference, OMDoc
  evaluator  the eight-check translation evaluation harness
  translator baselines and the external-model wire protocol
  cli        the `stexify` command
"""

from .latex import MathDelim, ParseError, find_math, parse, render
from .normalize import DEFAULT_CONFIG, NormalizationConfig, normalize
from .registry import (LoadError, Registry, SymbolDecl, expand,
                       is_fully_disambiguated, load_modsig)
from .corpus import CorpusEntry, extract_entry, fragment, to_training_examples
from .terms import SubtypeLattice, TypedSymbol, load_typed_symbols
from .synth import SynthConfig, VerbalizationSet, gen_term, synth_corpus, verbalize
from .semantics import (SymbolContext, infer_type, omdoc_equal, stex_to_term,
                        term_to_omdoc, term_to_stex)
from .evaluator import CheckResult, EvalReport, aggregate, render_report, run_checks
from .translator import (ExternalTranslator, IdentityTranslator, RulesTranslator,
                         TranslationRequest, TranslationResponse, translate_sentence)

__version__ = "0.1.0"
