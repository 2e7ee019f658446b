#pragma once

#include "ipmine/classifier.hpp"
#include "ipmine/corpus.hpp"
#include "ipmine/extraction.hpp"
#include "ipmine/features.hpp"
#include "ipmine/pipeline.hpp"
#include "ipmine/rng.hpp"
#include "ipmine/synthetic.hpp"
#include "ipmine/tokenizer.hpp"
#include "ipmine/transfer.hpp"
