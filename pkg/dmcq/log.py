'''
Sweep logs: CSV files of threshold probes and simulation points

A sweep log is plain CSV preceded by comment lines that start with '#':

    #[Sweep log format version 1.0]
    #[Manifest: out.csv.manifest.json]
    param,converged,iterations,mi_bits
    0.05,1,17,0.99991
    ...
    #[Bracket: 0.0707 0.0709]

"#[...]" comments carry metadata, other comments are free text.  The legend
line names the columns of every data row that follows.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
'''
import re

from dmcq.channel import ValidationException

THRESHOLD_COLUMNS = ('param', 'converged', 'iterations', 'mi_bits')
SIM_COLUMNS = ('param', 'frames', 'bit_errors', 'ber', 'fer')

INT_COLUMNS = frozenset(('converged', 'iterations', 'frames', 'bit_errors'))


def _format(value):
    if value is None:
        return ''
    if isinstance(value, bool):
        return '1' if value else '0'
    if isinstance(value, float):
        return repr(value)
    return str(value)


class SweepLogWriter():

    SWEEP_LOG_FORMAT_VERSION = "1.0"

    def __init__(self, output_file, columns):
        '''Params:
            output_file an open text file
            columns the column names of the data rows
        '''
        self.log = output_file
        self.columns = tuple(columns)

    def output_log_format_version(self):
        self.output_comment("[Sweep log format version " +
                            SweepLogWriter.SWEEP_LOG_FORMAT_VERSION + "]")

    def output_manifest(self, manifest_path):
        '''Reference the run manifest this log was produced with
        '''
        self.output_comment("[Manifest: %s]" % manifest_path)

    def output_bracket(self, lo, hi):
        '''Final threshold bracket [lo, hi]
        '''
        self.output_comment("[Bracket: %r %r]" % (float(lo), float(hi)))

    def output_comment(self, comment):
        self.log.write("#%s\n" % comment)

    def output_legend(self):
        self.log.write(",".join(self.columns) + "\n")

    def output_row(self, *values):
        if len(values) != len(self.columns):
            raise ValidationException('row has %d values, log has %d columns'
                                      % (len(values), len(self.columns)))
        self.log.write(",".join(_format(v) for v in values) + "\n")

    def close(self):
        self.log.close()


# "#[Bracket: %r %r]"
re_bracket = re.compile(r'#\[Bracket: *([^ \]]+) +([^ \]]+)\]')

# "#[Manifest: %s]"
re_manifest = re.compile(r'#\[Manifest: *(.*)\]')

# "#[Sweep log format version %s]"
re_version = re.compile(r'#\[Sweep log format version ([\d\.]+)\]')


class SweepLogReader():
    '''Reads a sweep log one data row at a time; metadata comments update
    bracket, manifest and version as they are met.
    '''

    def __init__(self, input_file):
        self.input_file = input_file
        self.columns = None
        self.bracket = None
        self.manifest = None
        self.version = None

    def _parse_comment(self, line):
        match_res = re_bracket.match(line)
        if match_res:
            self.bracket = (float(match_res.group(1)), float(match_res.group(2)))
            return
        match_res = re_manifest.match(line)
        if match_res:
            self.manifest = match_res.group(1).strip()
            return
        match_res = re_version.match(line)
        if match_res:
            self.version = match_res.group(1)

    def get_next_row(self):
        '''Next data row as a dict keyed by column name, None at the end

        Exceptions:
            ValidationException for a row with the wrong number of fields or
            a non-numeric field
        '''
        while 1:
            line = self.input_file.readline()
            if not line:
                return None
            line = line.strip()
            if not line:
                continue
            if line[0] == '#':
                self._parse_comment(line)
                continue
            fields = line.split(',')
            if self.columns is None:
                self.columns = tuple(fields)
                continue
            if len(fields) != len(self.columns):
                raise ValidationException('row %r does not match legend %s'
                                          % (line, ','.join(self.columns)))
            row = {}
            for name, text in zip(self.columns, fields):
                try:
                    if text == '':
                        row[name] = None
                    elif name in INT_COLUMNS:
                        row[name] = int(text)
                    else:
                        row[name] = float(text)
                except ValueError:
                    raise ValidationException('bad %s value %r' % (name, text)) from None
            return row

    def rows(self):
        '''All remaining data rows; the trailing metadata is read as well
        '''
        result = []
        row = self.get_next_row()
        while row is not None:
            result.append(row)
            row = self.get_next_row()
        return result

    def close(self):
        self.input_file.close()
