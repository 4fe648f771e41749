#pragma once

// Two-party privacy-preserving prediction: disguised-generalization RDF
// metadata exchange over an encrypted segment protocol, followed by a
// gradient-descent refinement loop with an expectation-probability stoppage.

#include "ppgd/cipher.hpp"
#include "ppgd/config.hpp"
#include "ppgd/dataset.hpp"
#include "ppgd/errors.hpp"
#include "ppgd/first_stage.hpp"
#include "ppgd/gradient.hpp"
#include "ppgd/log.hpp"
#include "ppgd/ontology.hpp"
#include "ppgd/rdf_xml.hpp"
#include "ppgd/segment.hpp"
#include "ppgd/session.hpp"
#include "ppgd/simulator.hpp"
#include "ppgd/strings.hpp"
#include "ppgd/sweep.hpp"
#include "ppgd/transport.hpp"
