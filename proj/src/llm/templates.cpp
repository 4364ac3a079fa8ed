#include "kgfuse/llm/templates.hpp"

#include <algorithm>

#include "kgfuse/util/error.hpp"

namespace kgfuse {

namespace {

constexpr std::string_view kRelationDefinitions =
    R"(   a) Compare: Represents a relation between two or more entities where a
      comparison is being made. For example, "A is larger than B" or "X is more
      efficient than Y."

   b) Part-of: Denotes a relation where one entity is a constituent or component of
      another. For instance, "Wheel is a part of a Car."

   c) Conjunction: Indicates a logical or semantic relation where two or more
      entities are connected to form a group or composite idea. For example, "Salt
      and Pepper."

   d) Evaluate-for: Represents an evaluative relation where one entity is assessed
      in the context of another. For example, "A tool is evaluated for its
      effectiveness."

   e) Is-a-Prerequisite-of: This dual-purpose relation implies that one entity is
      either a characteristic of another or a required precursor for another. For
      instance, "The ability to code is a prerequisite of software development."

   f) Used-for: Denotes a functional relation where one entity is utilized in
      accomplishing or facilitating the other. For example, "A hammer is used for
      driving nails."

   g) Hyponym-Of: Establishes a hierarchical relation where one entity is a more
      specific version or subtype of another. For instance, "A Sedan is a hyponym
      of a Car.")";

constexpr std::string_view kExtraction =
    R"(### Instruction:
You are a domain expert in natural language processing, and now you are building a
knowledge graph in this domain.

Given a context (### Content), and a query entity (### entity), do the following:

1. Extract the query entity and in-domain entities from the context, which should
   be fine-grained: could be introduced by a lecture slide page, or a whole
   lecture, or possibly to have a Wikipedia page.

2. Determine the relations between the query entity and the extracted entities, in
   a triplet format: (<head entity>, <relation>, <tail entity>). The relation
   should be functional, aiding learners in understanding the knowledge. The query
   entity can be the head entity or tail entity.

   We define 7 types of the relations:

{Relation Definition}

3. Please note some relations are strictly directional. For example, "A tool is
   evaluated for B" indicates (A, Evaluate-for, B), NOT (B, Evaluate-for, A).
   Among the seven relation types, only "a) Compare" and "c) Conjunction" are not
   direction-sensitive.

4. You can also extract triplets from the extracted entities, and the query entity
   may not be necessary in the triplets.

5. Your answer should ONLY contain a list of triplets, each triplet is in this
   format: (entity, relation, entity). For example: "(entity, relation, entity)
   (entity, relation, entity)." No numbering and other explanations are needed.

6. If ### Content is empty, output None.

### Content:
{context}

### entity:
{query})";

constexpr std::string_view kFusion =
    R"(### Instruction: You are a knowledge graph builder.
    Now please fuse two sub-knowledge graphs about the entity "{entity}".

Graph 1: {LLM-KG}   Graph 2: {E-G}

Rules for Fusing the Graphs:
1. Union the entities and edges.

2. If two entities are similar, or refer to the same entity, merge them into one
   entity, keeping he one that is meaningful or specific. For example, "lstm"
   versus "long short-term memory",  please keep "long short-term memory".

3. Only one relation is allowed between two entities. If there is a conflict, read
   the "### Background" to help you keep the correct relation. knowledge to keep the
   correct one. For example, (ROUGE, Evaluate-for, question answering model) and
   (ROUGE,Used-for , question answering model) are considered to be conflicts.

4. Once step 3 is done, consider every possible entity pair not covered in step 2.
   For example, take an entity from Graph 1, and match it from Graph 2. Then,
   please refer to "### Background" to summarize new triplets.

Hint: the relation types and their definition. You can use it to do Step 3.
We define 7 types of the relations:

{Relation Definition}

### Background:
{background}

### Output Instruction:
    Output the new merged data by listing the triplets. Your answer should ONLY contain triplets in this format: (entity, relation, entity). No other explanations or numbering are needed. Only triplets, no intermediate results.)";

constexpr std::string_view kLpCommon =
    R"(We have two {domain} related entities: A: {entity_1} and B: {entity_2}.

Do you think learning {entity_1} will help in understanding {entity_2}?

Hints:
1. Answer YES or NO only.
2. This is a directional relation, which means if the answer is "YES", (B, A) is
   false, but (A, B) is true.
3. Your answer will be used to create a knowledge graph.)";

const std::string kLpPlain{kLpCommon};

constexpr std::string_view kLpCot =
    R"(We have two {domain} related entities: A: {entity_1} and B: {entity_2}.

Assess if learning {entity_1} is a prerequisite for understanding {entity_2}.

Employ the Chain of Thought to detail your reasoning before giving a final answer.

# Identify the Domain and entities: Clearly define A and B within their domain.
  Understand the specific content and scope of each entity.

# Analyze the Directional Relationship: Determine if knowledge of entity A is
  essential before one can fully grasp entity B. This involves considering if A
  provides foundational knowledge or skills required for understanding B.

# Evaluate Dependency: Assess whether B is dependent on A in such a way that
  without understanding A, one cannot understand B.

# Draw a Conclusion: Based on your analysis, decide if understanding A is a
  necessary prerequisite for understanding B.

# Provide a Clear Answer: After detailed reasoning, conclude with a distinct answer
  : <result>YES</result> if understanding A is a prerequisite for understanding B,
  or <result>NO</result> if it is not.)";

const std::string kLpDoc = std::string(kLpCommon) +
    R"(

And here are related contents to help:
{related documents concatenation})";

const std::string kLpCon = std::string(kLpCommon) +
    R"(

And here are related contents to help:

We know that {entity_1} is a prerequisite of the following entities:
{1-hop successors of entity_1 from training data};

The following entities are the prerequisites of {entity_1}:
{1-hop predecessors of entity_1 from training data}.

We know that {entity_2} is a prerequisite of the following entities:
{1-hop successors of entity_2 from training data};

The following entities are the prerequisites of {entity_2}:
{1-hop predecessors of entity_2 from training data}.)";

const std::string kLpWiki = std::string(kLpCommon) +
    R"(

And here are related contents to help:
{Wikipedia introductory paragraph of entity_1}
{Wikipedia introductory paragraph of entity_2})";

constexpr std::string_view kQaCommand =
    R"(You are working with a knowledge graph of {domain} entities. To answer the
question below, first query the graph.

Available commands, one per line:
NEIGHBORS(entity, depth) - triplets reachable from the entity within depth hops
PATH(entity_a, entity_b) - a shortest chain of triplets connecting the two entities
SUBGRAPH(entity, hops) - the induced subgraph around the entity within hops
RELATION(entity_a, entity_b) - the stored relation between the two entities, if any

Write only commands, one per line. No explanations.

Question: {question})";

constexpr std::string_view kQaAnswer =
    R"(Answer the question using the knowledge graph context below.

### Graph context:
{context}

### Question: {question}

{format_instruction})";

}  // namespace

std::string_view template_id_name(TemplateId id) {
    switch (id) {
        case TemplateId::extraction: return "extraction";
        case TemplateId::fusion: return "fusion";
        case TemplateId::lp_plain: return "lp_plain";
        case TemplateId::lp_cot: return "lp_cot";
        case TemplateId::lp_doc: return "lp_doc";
        case TemplateId::lp_con: return "lp_con";
        case TemplateId::lp_wiki: return "lp_wiki";
        case TemplateId::qa_command: return "qa_command";
        case TemplateId::qa_answer: return "qa_answer";
    }
    return "unknown";
}

std::optional<TemplateId> parse_template_id(std::string_view name) {
    if (name == "extraction") return TemplateId::extraction;
    if (name == "fusion") return TemplateId::fusion;
    if (name == "lp_plain") return TemplateId::lp_plain;
    if (name == "lp_cot") return TemplateId::lp_cot;
    if (name == "lp_doc") return TemplateId::lp_doc;
    if (name == "lp_con") return TemplateId::lp_con;
    if (name == "lp_wiki") return TemplateId::lp_wiki;
    if (name == "qa_command") return TemplateId::qa_command;
    if (name == "qa_answer") return TemplateId::qa_answer;
    return std::nullopt;
}

std::string_view template_text(TemplateId id) {
    switch (id) {
        case TemplateId::extraction: return kExtraction;
        case TemplateId::fusion: return kFusion;
        case TemplateId::lp_plain: return kLpPlain;
        case TemplateId::lp_cot: return kLpCot;
        case TemplateId::lp_doc: return kLpDoc;
        case TemplateId::lp_con: return kLpCon;
        case TemplateId::lp_wiki: return kLpWiki;
        case TemplateId::qa_command: return kQaCommand;
        case TemplateId::qa_answer: return kQaAnswer;
    }
    throw TemplateError("unknown template id");
}

std::string_view relation_definitions() { return kRelationDefinitions; }

std::vector<std::string> template_placeholders(TemplateId id) {
    std::string_view text = template_text(id);
    std::vector<std::string> names;
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string_view::npos) {
        std::size_t close = text.find('}', pos + 1);
        if (close == std::string_view::npos) break;
        std::string name{text.substr(pos + 1, close - pos - 1)};
        if (name != "Relation Definition" &&
            std::find(names.begin(), names.end(), name) == names.end())
            names.push_back(std::move(name));
        pos = close + 1;
    }
    return names;
}

std::string render(TemplateId id, const std::map<std::string, std::string>& bindings) {
    std::string_view text = template_text(id);
    std::string out;
    out.reserve(text.size() + 256);
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t open = text.find('{', pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        std::size_t close = text.find('}', open + 1);
        if (close == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, open - pos));
        std::string name{text.substr(open + 1, close - open - 1)};
        if (name == "Relation Definition") {
            out.append(kRelationDefinitions);
        } else {
            auto it = bindings.find(name);
            if (it == bindings.end())
                throw TemplateError("unbound placeholder '{" + name + "}' in template '" +
                                    std::string(template_id_name(id)) + "'");
            out.append(it->second);
        }
        pos = close + 1;
    }
    return out;
}

}  // namespace kgfuse
