#ifndef HAABSA_HAABSA_HPP
#define HAABSA_HAABSA_HPP

#include "haabsa/autodiff.hpp"
#include "haabsa/checkpoint.hpp"
#include "haabsa/dataset.hpp"
#include "haabsa/embedder.hpp"
#include "haabsa/embeddings.hpp"
#include "haabsa/errors.hpp"
#include "haabsa/glove.hpp"
#include "haabsa/hybrid.hpp"
#include "haabsa/lcr_rot.hpp"
#include "haabsa/ontology.hpp"
#include "haabsa/tensor.hpp"
#include "haabsa/tpe.hpp"
#include "haabsa/training.hpp"

#endif
