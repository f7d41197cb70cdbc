#pragma once

#include "sga/autodiff.hpp"
#include "sga/checkpoint.hpp"
#include "sga/config.hpp"
#include "sga/corpus.hpp"
#include "sga/corpus_io.hpp"
#include "sga/embeddings.hpp"
#include "sga/gradcheck.hpp"
#include "sga/graph.hpp"
#include "sga/model.hpp"
#include "sga/optim.hpp"
#include "sga/rng.hpp"
#include "sga/stats.hpp"
#include "sga/synth.hpp"
#include "sga/tensor.hpp"
#include "sga/text.hpp"
#include "sga/toy.hpp"
#include "sga/train.hpp"
