#include "hardneg/editgen/prompts.hpp"

#include "hardneg/text.hpp"

namespace hardneg {

namespace {

struct Template {
  const char* header;
  std::vector<const char*> rules;
  const char* footer;  // after "Your Turn"
};

constexpr const char* kDims =
    R"(("Color", "Number", "Size", "Shape", "Other object physical attribute", "Weather Time", "Background", "Spatial relationship", "Comparative relationship", "Other object relationship"))";

const Template& template_for(TaskCategory c) {
  static const Template object{
      R"(You are a ResponseEditorGPT who is given an instruction and a response generated by a vision-language model. The instruction asks about the objects, or actions. Your task is as follows:)",
      {
          R"(Modify the "objects" or "action" to make the "Original Response" about "objects" or "actions" incorrect.)",
          R"("New Response" must be linguistically very similar to "Original Response" and must be incorrect.)",
          R"(You must ensure changes must be realistic given world knowledge.)",
          R"(You can minimally change other spans of the sentence to grammatical correctness and fluency.)",
          R"(The output format should be "New Response:")",
      },
      "New Response:"};

  static const Template color{
      R"(You are a ResponseEditorGPT who is given an instruction and a response generated by a vision-language model. The instruction asks about the colors of objects, environments, or themes. Your task is as follows:)",
      {
          R"(Modify the "colors" of all objects, environments, or themes in the response to make "Original Response" about "colors" incorrect.)",
          R"(You must only change the "colors", so that "New Response" is linguistically very similar to "Original Response" and is incorrect.)",
          R"(The "New colors" you use to replace original colors must be unique and not be too descriptive.)",
          R"(The "New colors" must be realistically possible, considering the object they describe.)",
          R"(You cannot use colors in the penalty list.)",
          R"(You can minimally change other spans of the sentence to grammatical correctness and fluency.)",
          R"(List the "New colors" you replace within the response.)",
      },
      "New Response:\nNew Colors:"};

  static const Template size{
      R"(You are a ResponseEditorGPT who is given an instruction and a response generated by a vision-language model. The instruction asks about the "size" of objects or themes. Your task is as follows:)",
      {
          R"(Modify the "size" of the objects or themes to make the "Original Response" about the "size" incorrect.)",
          R"("New Response" must be linguistically very similar to "Original Response" and must be incorrect.)",
          R"(You must ensure changes must be realistic given world knowledge.)",
          R"(You can minimally change other spans of the sentence to grammatical correctness and fluency.)",
          R"(The output format should be "New Response:")",
      },
      "New Response:"};

  static const Template background{
      R"(You are a ResponseEditorGPT who is given an instruction and a response generated by a vision-language model. The instruction asks about the "time", "weather", or "environment" of events, surroundings, or themes. Your task is as follows:)",
      {
          R"(Modify the "time", "weather", or "environment" of events, surroundings, or themes to make the "Original Response" about the "time", "weather", or "environment" incorrect.)",
          R"("New Response" must be linguistically very similar to "Original Response" and must be incorrect.)",
          R"(You must ensure changes must be realistic given world knowledge.)",
          R"(You can minimally change other spans of the sentence to grammatical correctness and fluency.)",
          R"(The output format should be "New Response:")",
      },
      "New Response:"};

  static const Template counting{
      R"(You are a ResponseEditorGPT who is given an instruction and a response generated by a vision-language model. The instruction asks about the counts of objects. Your task is as follows:)",
      {
          R"(Modify the "counts" of all objects in the response to make "Original Response" about "counts" incorrect.)",
          R"(You must only change the "counts", so that "New Response" is linguistically very similar to "Original Response" and is incorrect.)",
          R"(The "New counts" you use to replace original colors must be unique and not be too descriptive.)",
          R"(The "New counts" must be realistically possible, considering the object they describe.)",
          R"(You cannot use counts in the penalty list, neither the word form in the penalty nor its numerical form.)",
          R"(You can minimally change other spans of the sentence to grammatical correctness and fluency.)",
          R"(List the "New counts" you replace within the response.)",
      },
      "New Response:\nNew Counts:"};

  static const Template spatial{
      R"(You are a ResponseEditorGPT who is given an instruction and a response generated by a vision-language model. The instruction asks about the "spatial relation", of objects. Your task is as follows:)",
      {
          R"(Modify the "spatial relation" of objects to make the "Original Response" about the "spatial relation" incorrect.)",
          R"("New Response" must be linguistically very similar to "Original Response" and must be incorrect.)",
          R"(You must ensure changes must be realistic given world knowledge.)",
          R"(You can minimally change other spans of the sentence to grammatical correctness and fluency.)",
          R"(The output format should be "New Response:")",
      },
      "New Response:"};

  static const Template existence{
      R"(You are a ResponseEditorGPT who is given an instruction and a response generated by a vision-language model. The instruction asks about an "existence" of an object, object attribute, object count, object spatial relation, object comparison, background or theme. Your task is as follows:)",
      {
          R"(Modify the original response to change the polarity of the response, that is, make "Yes" a "No" and "No" a "Yes".)",
          R"(Paraphrase both the "Original Response" and the "New Response", such that it says, "Yes" or "No" followed by the ask in the question.)",
          R"("New Response" must be linguistically very similar to "Original Response" and must be incorrect.)",
          R"(You must ensure changes must be realistic given world knowledge.)",
          R"(You can minimally change other spans of the sentence to grammatical correctness and fluency.)",
          "The output format should be\n\"Original Response: \"\n\"New Response",
      },
      "New Response:"};

  static const Template refvqa{
      R"(You are a ResponseEditorGPT who is given an instruction and a response generated by a vision-language model. The instruction asks about counts, color, spatial location, comparison or existence of objects. More than one of the tasks can be asked in an instruction. Your task is as follows:)",
      {
          R"(Identify the different tasks asked in the question. You do not have to output this, only understand the intent.)",
          R"(Modify the spans in the response which answer the different tasks in the instruction to make "Original Response" incorrect.)",
          R"(You must only change the "spans", so that "New Response" is linguistically very similar to "Original Response" and is incorrect, while maintaining rest of the response.)",
          R"(You can minimally change other spans of the sentence to semantic correctness, grammatical correctness and fluency.)",
          R"(If the task is about colors or counts, ensure that you change the span with wide range of colors and counts respectively.)",
          R"(The "New colors" or "New Counts" must be realistically possible, considering the object they describe.)",
          R"(If the response is one word or small phrase, paraphrase both the "Original Response" and the "New Response", such that it says "New Response" is incorrect with respect to the "Original Response" while being semantically sensible. Both "Original Response" and "New Response" must now be full sentences.)",
      },
      "New Response:"};

  static const Template reasoning{
      R"(You are a ResponseEditorGPT who is given an instruction and a response generated by a vision-language model. The instruction asks about the "reasoning" of objects, events, environments, or themes. Your task is as follows:)",
      {
          R"(Make the reasoning in the original response incorrect.)",
          R"(You can modify the objects, their attributes, related objected, or action and make the "original response" about "reasoning" is incorrect.)",
          R"("New Response" must be linguistically very similar to "Original response" and must be incorrect.)",
          R"(You must ensure changes must be realistic given world knowledge.)",
          R"(You can minimally change other spans of the sentence to grammatical correctness and fluency.)",
          "The output format should be\n\"Original Response: \"\n\"New Response",
      },
      "New Response:"};

  static const Template caption_edit{
      nullptr,  // assembled in caption_edit_header()
      {
          R"(For each triplet, modify the phrase in the "Original response" corresponding to each triplet along the dimension mentioned in the triplet to make the "Original response" incorrect.)",
          R"("New Response" must be linguistically very similar to "Original response" and must be incorrect.)",
          R"(You must ensure changes must be realistic given world knowledge.)",
          R"(You can minimally change other spans of the sentence to grammatical correctness and fluency.)",
          "The output format should be\n\"Original Response: \"\n\"New Response",
      },
      "New Response:"};

  switch (c) {
    case TaskCategory::Object: return object;
    case TaskCategory::Color: return color;
    case TaskCategory::Size: return size;
    case TaskCategory::Background: return background;
    case TaskCategory::Counting: return counting;
    case TaskCategory::Spatial: return spatial;
    case TaskCategory::Existence: return existence;
    case TaskCategory::GeneralReasoning: return reasoning;
    case TaskCategory::ReferentialVQA: return refvqa;
    case TaskCategory::Captioning: return caption_edit;
  }
  return object;
}

std::string caption_edit_header() {
  return std::string(
             "You are a ResponseEditorGPT who is given an instruction and a response generated by a vision-language "
             "model. The response will consist of one or more visual elements - objects, object relationships, "
             "object attributes, environment information or actions. Each visual element is modified by one or more "
             "dimension, where a dimension must belong to the set ") +
         kDims +
         ". You will also be given a list of (visual element, dimension, phrase) triplets, where visual element is "
         "an element in the response, dimension modifies the visual element and phrase is a span from the response "
         "that shows how dimension modified the visual element.\n\nYour task is as follows:";
}

void append_rules(std::string& out, const std::vector<const char*>& rules) {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    out += std::to_string(i + 1);
    out += ". ";
    out += rules[i];
    out += "\n\n";
  }
}

void append_sample(std::string& out, std::string_view instruction, std::string_view response) {
  out += "Instruction: ";
  out += text::trim(instruction);
  out += "\n\nOriginal Response: ";
  out += text::trim(response);
  out += "\n\n";
}

}  // namespace

std::string render_list(const std::vector<std::string>& values) { return "[" + text::join(values, ", ") + "]"; }

std::string render_triplets(const std::vector<Triplet>& triplets) {
  std::string out = "[";
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    if (i) out += ", ";
    out += "(\"" + triplets[i].visual_element + "\", \"" + std::string(to_string(triplets[i].dimension)) + "\", \"" +
           triplets[i].phrase + "\")";
  }
  return out + "]";
}

std::string build_prompt(TaskCategory category, std::string_view instruction, std::string_view response,
                         const PenaltyList* penalty, const std::vector<Triplet>* triplets) {
  if (uses_penalty(category) && !penalty)
    throw Error(Errc::MissingPenalty, std::string(to_string(category)) + " prompts need a penalty list");
  if (category == TaskCategory::Captioning && !triplets)
    throw Error(Errc::MissingTriplets, "captioning edit prompts need a triplet list");

  const auto& t = template_for(category);
  std::string out = t.header ? std::string(t.header) : caption_edit_header();
  out += "\n\n";
  append_rules(out, t.rules);
  if (category == TaskCategory::Color || category == TaskCategory::Counting) {
    out += "Penalty list: " + render_list(penalty->values()) + "\n\n";
  }
  append_sample(out, instruction, response);
  if (category == TaskCategory::Captioning) out += "Triplet List: " + render_triplets(*triplets) + "\n\n";
  out += "Your Turn\n";
  out += t.footer;
  return out;
}

std::string build_triplet_prompt(std::string_view instruction, std::string_view response) {
  std::string out =
      std::string(
          "You are a ResponseAnalyzerGPT who is given an instruction and a response generated by a vision-language "
          "model. The response will consist of one or more visual elements - objects, object relationships, object "
          "attributes, environment information or actions. Each visual element is modified by one or more "
          "dimension, where a dimension belongs to the set ") +
      kDims +
      "\n\nYour task is to list (visual element, dimension, phrase) triplet, where visual element is an element in "
      "the response, dimension modifies the visual element and phrase is a span from the response that shows how "
      "dimension modified the visual element.\n\nYou must follow the guidelines given below:\n\n";
  const std::string rule2 = std::string("The dimension must always belong to the set ") + kDims;
  append_rules(out, {"Do not repeat the same triplet.", rule2.c_str(),
                     R"(Output format Must be "Triplet List : []" where "[]" is a list of triplets)"});
  append_sample(out, instruction, response);
  out += "Your Turn\nTriplet List: []";
  return out;
}

}  // namespace hardneg
