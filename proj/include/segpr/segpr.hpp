#pragma once

#include "segpr/config.hpp"
#include "segpr/corpus.hpp"
#include "segpr/crf.hpp"
#include "segpr/encoder.hpp"
#include "segpr/errors.hpp"
#include "segpr/eval.hpp"
#include "segpr/graph.hpp"
#include "segpr/lexicon.hpp"
#include "segpr/matrix.hpp"
#include "segpr/model.hpp"
#include "segpr/optimizer.hpp"
#include "segpr/rng.hpp"
#include "segpr/spans.hpp"
#include "segpr/synth.hpp"
#include "segpr/tags.hpp"
#include "segpr/trainer.hpp"
#include "segpr/utf8.hpp"
